//! MCRB sweeps with optional Monte Carlo verification.

use crate::bounds::{c_t_dual, c_t_single, doppler_shift};
use crate::error::Result;
use crate::protocol::{reply_timing, symbol_period, to_f64, ReplyParts, ReplyTiming};

use super::config::{ExperimentConfig, McrbSweep};
use super::csv::{Cell, Column, CsvTable};
use super::{exact_seconds, EmpiricalStats, FrameShape, TrialSetup};

#[derive(Debug, Clone, PartialEq)]
pub struct McrbRow {
    /// Value of the swept variable.
    pub x: f64,
    pub ps_n0_dbhz: f64,
    pub c_t: f64,
    pub mcrb: f64,
    /// Bound the empirical variance is compared with (includes the
    /// finite-L factor where it applies).
    pub reference_bound: f64,
    pub empirical: Option<EmpiricalStats>,
}

/// Frame setup for grid value `x`.
pub fn setup_for(cfg: &ExperimentConfig, x: f64) -> Result<TrialSetup> {
    let mut setup = TrialSetup::from_config(cfg)?;
    match cfg.sweep {
        McrbSweep::PsN0 => setup.ps_n0_dbhz = x,
        McrbSweep::T0 => {
            let t0 = exact_seconds(x)?;
            let ts = to_f64(symbol_period(cfg.mode.blf_hz, cfg.mode.encoding)?);
            let l_symbols = ((x / ts).round() as usize).max(1);
            setup.shape = FrameShape::RectSingle { t0, l_symbols };
        }
        McrbSweep::TPause => {
            let base = reply_timing(&cfg.mode)?;
            let timing = ReplyTiming::new(base.t_rn16, exact_seconds(x)?, base.t_epc)?;
            if let FrameShape::Reply {
                timing: t, parts, ..
            } = &mut setup.shape
            {
                *t = timing;
                *parts = ReplyParts::Both;
            }
        }
    }
    Ok(setup)
}

/// Analytic rows only.
pub fn mcrb_rows(cfg: &ExperimentConfig) -> Result<Vec<McrbRow>> {
    rows(cfg, false)
}

/// Analytic rows plus empirical statistics from `cfg.trials` simulated
/// frames per grid point. Deterministic in `(cfg, cfg.seed)`.
pub fn run_mcrb_experiment(cfg: &ExperimentConfig) -> Result<Vec<McrbRow>> {
    rows(cfg, true)
}

fn rows(cfg: &ExperimentConfig, simulate: bool) -> Result<Vec<McrbRow>> {
    cfg.validate()?;
    let f_d = doppler_shift(cfg.v, cfg.f_c);
    let mut out = Vec::with_capacity(cfg.grid.len());
    for (g, &x) in cfg.grid.iter().enumerate() {
        let setup = setup_for(cfg, x)?;
        // analytic columns use the grid value itself; simulated frames round
        // durations to whole nanoseconds
        let c_t = match cfg.sweep {
            McrbSweep::PsN0 => setup.c_t()?,
            McrbSweep::T0 => c_t_single(x)?,
            McrbSweep::TPause => {
                let t = reply_timing(&cfg.mode)?;
                c_t_dual(t.rn16_s(), t.epc_s(), x)?
            }
        };
        let mcrb = crate::bounds::mcrb_sigma_sq(c_t, crate::units::db_to_linear(setup.ps_n0_dbhz))?;
        let reference_bound = setup.reference_bound()?;
        let empirical = if simulate {
            let est = setup.run_trials(f_d, cfg.seed, g, cfg.trials, cfg.execution)?;
            Some(EmpiricalStats::from_estimates(&est, f_d, reference_bound))
        } else {
            None
        };
        out.push(McrbRow {
            x,
            ps_n0_dbhz: setup.ps_n0_dbhz,
            c_t,
            mcrb,
            reference_bound,
            empirical,
        });
    }
    Ok(out)
}

pub fn mcrb_table(cfg: &ExperimentConfig, rows: &[McrbRow]) -> CsvTable {
    let (name, unit) = cfg.sweep.column();
    let mut cols = vec![Column::new(name, unit)];
    if cfg.sweep != McrbSweep::PsN0 {
        cols.push(Column::new("ps_n0_dbhz", "dB-Hz"));
    }
    cols.extend([
        Column::new("c_t_s3", "s^3"),
        Column::new("mcrb_hz2", "Hz^2"),
        Column::new("reference_bound_hz2", "Hz^2"),
    ]);
    let simulated = rows.iter().any(|r| r.empirical.is_some());
    if simulated {
        cols.extend([
            Column::new("trials", "count"),
            Column::new("mean_error_hz", "Hz"),
            Column::new("empirical_var_hz2", "Hz^2"),
            Column::new("var_ratio", "1"),
        ]);
    }
    let title = format!(
        "MCRB sweep, {} ({} {}), modulation {}, parts {}, model {}",
        cfg.mode.label, cfg.mode.encoding, cfg.mode.blf_hz, cfg.modulation, cfg.parts, cfg.model
    );
    let mut t = CsvTable::new(title, cols);
    for r in rows {
        let mut row = vec![Cell::from(r.x)];
        if cfg.sweep != McrbSweep::PsN0 {
            row.push(r.ps_n0_dbhz.into());
        }
        row.extend([r.c_t.into(), r.mcrb.into(), r.reference_bound.into()]);
        if let Some(e) = r.empirical {
            row.extend([
                Cell::from(e.trials as u64),
                e.mean_error.into(),
                e.variance.into(),
                e.ratio.into(),
            ]);
        }
        t.push(row);
    }
    t
}

/// Rows whose variance ratio falls outside `[lo, hi]`.
pub fn check_tightness(rows: &[McrbRow], lo: f64, hi: f64) -> Vec<&McrbRow> {
    rows.iter()
        .filter(|r| {
            r.empirical
                .is_some_and(|e| !(e.ratio >= lo && e.ratio <= hi))
        })
        .collect()
}
