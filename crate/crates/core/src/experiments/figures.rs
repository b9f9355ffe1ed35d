//! Closed-form curve data behind the figures, in long CSV format (one
//! `series` column, one row per point).
//!
//! | id | x | y | series |
//! |----|---|---|--------|
//! | 4 | speed | tolerable variance | error probability |
//! | 5 | single-part length | MCRB | `P_S/N0` |
//! | 7 | pause | MCRB | RN16 + EPC of Miller-8 at 40 kHz, plus the actual pause |
//! | 8 | speed | required `P_S/N0` | error probability |
//! | 9 | speed | required `P_S/N0` | encoding and BLF |
//! | 10 | speed | required `P_S` | noise figure and timing |
//! | 11 | speed | required `P_S` | EPC length and reader mode |
//!
//! Figures 5 and 7 optionally carry empirical columns from simulation.

use crate::bounds::{required_ps_n0, sigma_max_sq, MotionScenario};
use crate::error::{Error, Result};
use crate::protocol::{reply_timing, EncodingScheme, ReaderMode, ReplyParts};
use crate::units::THERMAL_NOISE_DBM_HZ;

use super::config::{ExperimentConfig, McrbSweep};
use super::csv::{fmt_g12, Cell, Column, CsvTable};
use super::mcrb::{mcrb_rows, run_mcrb_experiment, McrbRow};
use super::seeding::mix;

pub const FIGURE_IDS: [u32; 7] = [4, 5, 7, 8, 9, 10, 11];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FigureOptions {
    /// Add Monte Carlo columns to figures 5 and 7.
    pub empirical: bool,
}

const DEFAULT_P_ERR_SERIES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const FIG5_RATIOS: [f64; 3] = [30.0, 52.8, 80.0];
const FIG10_NF_DB: [f64; 4] = [10.0, 20.0, 25.4, 30.0];
const FIG9_BLF_HZ: [u32; 3] = [40_000, 160_000, 640_000];

/// Miller-8 at 40 kHz, the longest reply Gen2 allows.
pub fn reference_mode() -> ReaderMode {
    ReaderMode::new("Miller-8 BLF 40 kHz", 40_000, EncodingScheme::Miller8).expect("valid mode")
}

fn p_err_series(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.is_explicit("p_err") {
        cfg.p_err.clone()
    } else {
        DEFAULT_P_ERR_SERIES.to_vec()
    }
}

fn c_t_both(mode: &ReaderMode) -> Result<f64> {
    crate::bounds::c_t_for(&reply_timing(mode)?, ReplyParts::Both)
}

pub fn figure_dataset(id: u32, cfg: &ExperimentConfig, opts: FigureOptions) -> Result<CsvTable> {
    cfg.validate()?;
    match id {
        4 => figure4(cfg),
        5 => figure5(cfg, opts),
        7 => figure7(cfg, opts),
        8 => figure8(cfg),
        9 => figure9(cfg),
        10 => figure10(cfg),
        11 => figure11(cfg),
        _ => Err(Error::NotFound(format!(
            "figure {id} (available: 4, 5, 7, 8, 9, 10, 11)"
        ))),
    }
}

fn figure4(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let mut t = CsvTable::new(
        format!("tolerable estimation variance, f_c {} Hz", fmt_g12(cfg.f_c)),
        vec![
            Column::new("series", ""),
            Column::new("p_err", "1"),
            Column::new("v_m_per_s", "m/s"),
            Column::new("sigma_max_sq_hz2", "Hz^2"),
        ],
    );
    for p in p_err_series(cfg) {
        for &v in &cfg.v_grid {
            let s = sigma_max_sq(&MotionScenario::new(v, cfg.f_c, p)?)?;
            t.push(vec![
                format!("p_err={}", fmt_g12(p)).into(),
                p.into(),
                v.into(),
                s.into(),
            ]);
        }
    }
    Ok(t)
}

fn mcrb_columns(x: (&str, &str), empirical: bool) -> Vec<Column> {
    let mut cols = vec![
        Column::new("series", ""),
        Column::new("ps_n0_dbhz", "dB-Hz"),
        Column::new(x.0, x.1),
        Column::new("c_t_s3", "s^3"),
        Column::new("mcrb_hz2", "Hz^2"),
    ];
    if empirical {
        cols.extend([
            Column::new("reference_bound_hz2", "Hz^2"),
            Column::new("trials", "count"),
            Column::new("empirical_var_hz2", "Hz^2"),
            Column::new("var_ratio", "1"),
        ]);
    }
    cols
}

fn push_mcrb_rows(t: &mut CsvTable, series: &str, rows: &[McrbRow]) {
    for r in rows {
        let mut row: Vec<Cell> = vec![
            series.into(),
            r.ps_n0_dbhz.into(),
            r.x.into(),
            r.c_t.into(),
            r.mcrb.into(),
        ];
        if let Some(e) = r.empirical {
            row.extend([
                Cell::from(r.reference_bound),
                Cell::from(e.trials),
                e.variance.into(),
                e.ratio.into(),
            ]);
        }
        t.push(row);
    }
}

fn sweep_rows(cfg: &ExperimentConfig, empirical: bool) -> Result<Vec<McrbRow>> {
    if empirical {
        run_mcrb_experiment(cfg)
    } else {
        mcrb_rows(cfg)
    }
}

fn figure5(cfg: &ExperimentConfig, opts: FigureOptions) -> Result<CsvTable> {
    let ratios = if cfg.is_explicit("ps_n0_dbhz") || cfg.is_explicit("p_s_dbm") {
        vec![cfg.link.ps_n0_dbhz]
    } else {
        FIG5_RATIOS.to_vec()
    };
    let grid = if cfg.is_explicit("grid") {
        cfg.grid.clone()
    } else {
        super::config::parse_grid("grid", "log:1e-4:0.1:31")?
    };
    let mut t = CsvTable::new(
        "MCRB of a single signal part over its length",
        mcrb_columns(("t0_s", "s"), opts.empirical),
    );
    for (k, &ratio) in ratios.iter().enumerate() {
        let mut c = cfg.clone();
        c.sweep = McrbSweep::T0;
        c.grid = grid.clone();
        c.link = crate::bounds::LinkBudget::from_ps_n0(ratio);
        c.seed = mix(cfg.seed.wrapping_add(k as u64));
        let rows = sweep_rows(&c, opts.empirical)?;
        push_mcrb_rows(&mut t, &format!("ps_n0={}", fmt_g12(ratio)), &rows);
    }
    Ok(t)
}

fn figure7(cfg: &ExperimentConfig, opts: FigureOptions) -> Result<CsvTable> {
    let mode =
        if cfg.is_explicit("mode") || cfg.is_explicit("blf_hz") || cfg.is_explicit("encoding") {
            cfg.mode.clone()
        } else {
            reference_mode()
        };
    let timing = reply_timing(&mode)?;
    let mut c = cfg.clone();
    c.sample_rate = if cfg.is_explicit("sample_rate_hz") {
        cfg.sample_rate
    } else {
        crate::signal::default_sample_rate(mode.blf_hz)
    };
    c.mode = mode;
    c.sweep = McrbSweep::TPause;
    c.parts = ReplyParts::Both;
    c.grid = if cfg.is_explicit("grid") {
        cfg.grid.clone()
    } else {
        super::config::parse_grid("grid", "lin:0:0.02:41")?
    };
    let mut t = CsvTable::new(
        format!(
            "MCRB of two signal parts ({} s, {} s) over the pause, {} dB-Hz",
            fmt_g12(timing.rn16_s()),
            fmt_g12(timing.epc_s()),
            fmt_g12(cfg.link.ps_n0_dbhz)
        ),
        mcrb_columns(("t_pause_s", "s"), opts.empirical),
    );
    push_mcrb_rows(&mut t, "two_parts", &sweep_rows(&c, opts.empirical)?);
    c.grid = vec![timing.pause_s()];
    c.seed = mix(cfg.seed);
    push_mcrb_rows(&mut t, "tag_reply", &sweep_rows(&c, opts.empirical)?);
    Ok(t)
}

fn figure8(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let mode = reference_mode();
    let c_t = c_t_both(&mode)?;
    let mut t = CsvTable::new(
        format!("required P_S/N0, {}, RN16 + EPC", mode.label),
        vec![
            Column::new("series", ""),
            Column::new("p_err", "1"),
            Column::new("v_m_per_s", "m/s"),
            Column::new("required_ps_n0_dbhz", "dB-Hz"),
        ],
    );
    for p in p_err_series(cfg) {
        for &v in &cfg.v_grid {
            t.push(vec![
                format!("p_err={}", fmt_g12(p)).into(),
                p.into(),
                v.into(),
                required_ps_n0(v, c_t, cfg.f_c, p)?.into(),
            ]);
        }
    }
    Ok(t)
}

fn figure9(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let p = cfg.p_err[0];
    let mut t = CsvTable::new(
        format!("required P_S/N0 by encoding and BLF, p_err {}", fmt_g12(p)),
        vec![
            Column::new("series", ""),
            Column::new("encoding", ""),
            Column::new("blf_hz", "Hz"),
            Column::new("v_m_per_s", "m/s"),
            Column::new("required_ps_n0_dbhz", "dB-Hz"),
        ],
    );
    for enc in EncodingScheme::ALL {
        for blf in FIG9_BLF_HZ {
            let mode = ReaderMode::new(format!("{enc} {} kHz", blf / 1000), blf, enc)?;
            let c_t = c_t_both(&mode)?;
            for &v in &cfg.v_grid {
                t.push(vec![
                    mode.label.clone().into(),
                    enc.to_string().into(),
                    Cell::from(u64::from(blf)),
                    v.into(),
                    required_ps_n0(v, c_t, cfg.f_c, p)?.into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn figure10(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let p = cfg.p_err[0];
    let nfs = if cfg.is_explicit("nf_db") || cfg.is_explicit("n0_dbm_hz") {
        vec![cfg.n0_dbm_hz - THERMAL_NOISE_DBM_HZ]
    } else {
        FIG10_NF_DB.to_vec()
    };
    let modes = [reference_mode(), cfg.catalog.get("Mode 290")?.clone()];
    let mut t = CsvTable::new(
        format!("required P_S by noise figure, p_err {}", fmt_g12(p)),
        vec![
            Column::new("series", ""),
            Column::new("timing", ""),
            Column::new("nf_db", "dB"),
            Column::new("v_m_per_s", "m/s"),
            Column::new("required_ps_dbm", "dBm"),
        ],
    );
    for mode in &modes {
        let c_t = c_t_both(mode)?;
        for &nf in &nfs {
            for &v in &cfg.v_grid {
                t.push(vec![
                    format!("{} NF={}", mode.label, fmt_g12(nf)).into(),
                    mode.label.clone().into(),
                    nf.into(),
                    v.into(),
                    crate::bounds::required_ps_dbm(v, c_t, cfg.f_c, p, nf)?.into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn figure11(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let p = cfg.p_err[0];
    let n0 = cfg.n0_dbm_hz;
    let mode290 = cfg.catalog.get("Mode 290")?;
    let mut modes = Vec::new();
    for bits in [96, 128, 256] {
        let mut m = mode290.clone().with_epc_bits(bits)?;
        m.label = format!("{} EPC {bits}", mode290.label);
        modes.push(m);
    }
    modes.extend(
        cfg.catalog
            .modes()
            .iter()
            .filter(|m| m.label != mode290.label)
            .cloned(),
    );
    modes.push(reference_mode());
    let mut t = CsvTable::new(
        format!(
            "required P_S by reader mode and EPC length, N0 {} dBm-Hz, p_err {}",
            fmt_g12(n0),
            fmt_g12(p)
        ),
        vec![
            Column::new("series", ""),
            Column::new("epc_bits", "bit"),
            Column::new("sensitivity_dbm", "dBm"),
            Column::new("v_m_per_s", "m/s"),
            Column::new("required_ps_dbm", "dBm"),
        ],
    );
    for mode in &modes {
        let c_t = c_t_both(mode)?;
        let sens: Cell = match mode.sensitivity_dbm {
            Some(s) => s.into(),
            None => "".into(),
        };
        for &v in &cfg.v_grid {
            t.push(vec![
                mode.label.clone().into(),
                Cell::from(u64::from(mode.epc_bits)),
                sens.clone(),
                v.into(),
                (required_ps_n0(v, c_t, cfg.f_c, p)? + n0).into(),
            ]);
        }
    }
    Ok(t)
}
