//! Closed-form tables for the `bounds`, `vmin` and `noise-figure` commands.

use crate::bounds::{
    c_t_for, evaluate, noise_density_from_sensitivity, p_err_from_sigma, MotionScenario,
    NoiseEstimate,
};
use crate::error::Result;
use crate::protocol::{reply_timing, ReplyParts};

use super::config::ExperimentConfig;
use super::csv::{fmt_g12, Cell, Column, CsvTable};

/// Per speed and target error: tolerable variance, MCRB, the error the
/// MCRB implies and whether the speed is detectable.
pub fn bounds_table(cfg: &ExperimentConfig) -> Result<CsvTable> {
    cfg.validate()?;
    let c_t = c_t_for(&reply_timing(&cfg.mode)?, cfg.parts)?;
    let mut t = CsvTable::new(
        format!(
            "bounds, {} ({} {}), parts {}, {} dB-Hz, f_c {} Hz",
            cfg.mode.label,
            cfg.mode.encoding,
            cfg.mode.blf_hz,
            cfg.parts,
            fmt_g12(cfg.link.ps_n0_dbhz),
            fmt_g12(cfg.f_c)
        ),
        vec![
            Column::new("v_m_per_s", "m/s"),
            Column::new("p_err", "1"),
            Column::new("f_d_hz", "Hz"),
            Column::new("sigma_max_sq_hz2", "Hz^2"),
            Column::new("mcrb_hz2", "Hz^2"),
            Column::new("p_err_at_mcrb", "1"),
            Column::new("v_min_m_per_s", "m/s"),
            Column::new("detectable", "bool"),
        ],
    );
    for &p in &cfg.p_err {
        for &v in &cfg.v_grid {
            let r = evaluate(
                MotionScenario::new(v, cfg.f_c, p)?,
                c_t,
                cfg.link.ps_n0_dbhz,
            )?;
            t.push(vec![
                v.into(),
                p.into(),
                crate::bounds::doppler_shift(v, cfg.f_c).into(),
                r.sigma_max_sq.into(),
                r.sigma_mcrb_sq.into(),
                p_err_from_sigma(r.sigma_mcrb_sq, v, cfg.f_c)?.into(),
                r.v_min.into(),
                Cell::from(if r.sigma_mcrb_sq <= r.sigma_max_sq {
                    "true"
                } else {
                    "false"
                }),
            ]);
        }
    }
    Ok(t)
}

/// Minimum detectable speed of the configured mode for each reply part
/// selection and target error.
pub fn vmin_table(cfg: &ExperimentConfig) -> Result<CsvTable> {
    cfg.validate()?;
    let timing = reply_timing(&cfg.mode)?;
    let ratio = cfg.link.ps_n0_linear();
    let mut t = CsvTable::new(
        format!(
            "minimum detectable speed, {} ({} {}), {} dB-Hz, f_c {} Hz",
            cfg.mode.label,
            cfg.mode.encoding,
            cfg.mode.blf_hz,
            fmt_g12(cfg.link.ps_n0_dbhz),
            fmt_g12(cfg.f_c)
        ),
        vec![
            Column::new("parts", ""),
            Column::new("p_err", "1"),
            Column::new("c_t_s3", "s^3"),
            Column::new("ps_n0_dbhz", "dB-Hz"),
            Column::new("v_min_m_per_s", "m/s"),
        ],
    );
    for &p in &cfg.p_err {
        for parts in [ReplyParts::Rn16, ReplyParts::Epc, ReplyParts::Both] {
            let c_t = c_t_for(&timing, parts)?;
            t.push(vec![
                parts.to_string().into(),
                p.into(),
                c_t.into(),
                cfg.link.ps_n0_dbhz.into(),
                crate::bounds::v_min(cfg.f_c, p, c_t, ratio)?.into(),
            ]);
        }
    }
    Ok(t)
}

pub fn noise_figure_report(
    p_s_dbm: f64,
    ber: f64,
    blf_hz: f64,
    spread_factor: u32,
) -> Result<(NoiseEstimate, CsvTable)> {
    let est = noise_density_from_sensitivity(p_s_dbm, ber, blf_hz, spread_factor)?;
    let mut t = CsvTable::new(
        format!(
            "noise density from sensitivity {} dBm at BER {}, BLF {} Hz, M = {}",
            fmt_g12(p_s_dbm),
            fmt_g12(ber),
            fmt_g12(blf_hz),
            spread_factor
        ),
        vec![
            Column::new("p_s_dbm", "dBm"),
            Column::new("ber", "1"),
            Column::new("ps_n0_dbhz", "dB-Hz"),
            Column::new("n0_dbm_hz", "dBm/Hz"),
            Column::new("nf_db", "dB"),
        ],
    );
    t.push(vec![
        p_s_dbm.into(),
        ber.into(),
        est.ps_n0_dbhz.into(),
        est.n0_dbm_hz.into(),
        est.nf_db.into(),
    ]);
    Ok((est, t))
}
