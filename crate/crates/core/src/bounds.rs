//! Closed-form bounds for Doppler-based motion detection.
//!
//! All functions take linear quantities (Hz, seconds, W/W-per-Hz ratios);
//! decibel conversion happens only in the `*_db*` helpers and in
//! [`LinkBudget`].
//!
//! * [`sigma_max_sq`]: largest Doppler estimation variance that still
//!   separates a tag moving at `v` from a static one with error `p_err`.
//! * [`mcrb_sigma_sq`]: smallest achievable variance (modified Cramér-Rao
//!   bound) for a known-symbol backscatter reply with timing factor `C_T`.
//! * [`v_min`]: the speed at which both meet.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::protocol::{ReplyParts, ReplyTiming};
use crate::special::{erf, erf_inv};
use crate::units::{db_to_linear, linear_to_db, SPEED_OF_LIGHT, THERMAL_NOISE_DBM_HZ};

/// Received tag power, noise density and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub p_s_dbm: Option<f64>,
    pub n0_dbm_hz: Option<f64>,
    pub nf_db: Option<f64>,
    pub ps_n0_dbhz: f64,
}

impl LinkBudget {
    pub fn from_ps_n0(ps_n0_dbhz: f64) -> Self {
        LinkBudget {
            p_s_dbm: None,
            n0_dbm_hz: None,
            nf_db: None,
            ps_n0_dbhz,
        }
    }

    pub fn from_power_and_nf(p_s_dbm: f64, nf_db: f64) -> Self {
        let n0 = noise_density_dbm_hz(nf_db);
        LinkBudget {
            p_s_dbm: Some(p_s_dbm),
            n0_dbm_hz: Some(n0),
            nf_db: Some(nf_db),
            ps_n0_dbhz: p_s_dbm - n0,
        }
    }

    pub fn from_power_and_n0(p_s_dbm: f64, n0_dbm_hz: f64) -> Self {
        LinkBudget {
            p_s_dbm: Some(p_s_dbm),
            n0_dbm_hz: Some(n0_dbm_hz),
            nf_db: Some(n0_dbm_hz - THERMAL_NOISE_DBM_HZ),
            ps_n0_dbhz: p_s_dbm - n0_dbm_hz,
        }
    }

    /// `P_S / N0` in Hz.
    pub fn ps_n0_linear(&self) -> f64 {
        db_to_linear(self.ps_n0_dbhz)
    }
}

/// One-sided noise density for a receiver with noise figure `nf_db`.
pub fn noise_density_dbm_hz(nf_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + nf_db
}

/// A tag moving radially at speed `v` under a carrier `f_c`, to be told
/// apart from a static tag with error probability `p_err`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionScenario {
    pub v: f64,
    pub f_c: f64,
    pub p_err: f64,
}

impl MotionScenario {
    pub fn new(v: f64, f_c: f64, p_err: f64) -> Result<Self> {
        check_carrier(f_c)?;
        check_p_err(p_err)?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!(
                "speed must be non-negative, got {v}"
            )));
        }
        Ok(MotionScenario { v, f_c, p_err })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub scenario: MotionScenario,
    pub ps_n0_dbhz: f64,
    pub c_t: f64,
    pub sigma_max_sq: f64,
    pub sigma_mcrb_sq: f64,
    pub v_min: f64,
}

/// Evaluates every bound for one scenario and timing factor.
pub fn evaluate(scenario: MotionScenario, c_t: f64, ps_n0_dbhz: f64) -> Result<BoundResult> {
    let ratio = db_to_linear(ps_n0_dbhz);
    Ok(BoundResult {
        scenario,
        ps_n0_dbhz,
        c_t,
        sigma_max_sq: sigma_max_sq(&scenario)?,
        sigma_mcrb_sq: mcrb_sigma_sq(c_t, ratio)?,
        v_min: v_min(scenario.f_c, scenario.p_err, c_t, ratio)?,
    })
}

fn check_p_err(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain(format!(
            "error probability must lie in (0, 0.5), got {p}"
        )));
    }
    Ok(())
}

fn check_carrier(f_c: f64) -> Result<()> {
    if !(f_c > 0.0) || !f_c.is_finite() {
        return Err(Error::Domain(format!(
            "carrier frequency must be positive, got {f_c}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "{name} must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

/// `erf_inv(1 - 2 p_err)`
fn separation_quantile(p_err: f64) -> Result<f64> {
    check_p_err(p_err)?;
    erf_inv(1.0 - 2.0 * p_err)
}

/// Two-way Doppler shift `2 v f_c / c`; positive for a tag approaching the
/// antenna.
pub fn doppler_shift(v: f64, f_c: f64) -> f64 {
    2.0 * v * f_c / SPEED_OF_LIGHT
}

/// Largest estimator variance (Hz²) that keeps the error at `p_err`.
pub fn sigma_max_sq(s: &MotionScenario) -> Result<f64> {
    if s.v == 0.0 {
        return Err(Error::Domain(
            "no decision threshold exists for v = 0".into(),
        ));
    }
    let q = separation_quantile(s.p_err)?;
    Ok(s.v * s.v * s.f_c * s.f_c / (2.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT * q * q))
}

/// Timing factor for a single signal of length `t0`.
pub fn c_t_single(t0: f64) -> Result<f64> {
    check_positive("signal duration", t0)?;
    Ok(t0 * t0 * t0)
}

/// Timing factor for two signals separated by a pause.
pub fn c_t_dual(t1: f64, t2: f64, t_pause: f64) -> Result<f64> {
    check_positive("first signal duration", t1)?;
    check_positive("second signal duration", t2)?;
    if !(t_pause >= 0.0) || !t_pause.is_finite() {
        return Err(Error::Domain(format!(
            "pause must be non-negative, got {t_pause}"
        )));
    }
    let sum = t1 + t2;
    Ok(sum * sum * sum + 12.0 * t1 * t2 * t_pause * (sum + t_pause) / sum)
}

/// Timing factor for a Gen2 reply using the selected parts.
pub fn c_t_for(timing: &ReplyTiming, parts: ReplyParts) -> Result<f64> {
    match parts {
        ReplyParts::Rn16 => c_t_single(timing.rn16_s()),
        ReplyParts::Epc => c_t_single(timing.epc_s()),
        ReplyParts::Both => c_t_dual(timing.rn16_s(), timing.epc_s(), timing.pause_s()),
    }
}

/// Modified Cramér-Rao bound on the Doppler estimate, in Hz².
pub fn mcrb_sigma_sq(c_t: f64, ps_n0_linear: f64) -> Result<f64> {
    check_positive("timing factor", c_t)?;
    check_positive("P_S/N0", ps_n0_linear)?;
    Ok(3.0 / (2.0 * PI * PI * c_t) / ps_n0_linear)
}

/// `1 / (1 - 3/(4 L²))`: exact ASK correction for `L` half-reflect symbols.
pub fn finite_l_factor(l_symbols: u64) -> Result<f64> {
    if l_symbols == 0 {
        return Err(Error::Domain("symbol count must be at least 1".into()));
    }
    let l = l_symbols as f64;
    Ok(1.0 / (1.0 - 3.0 / (4.0 * l * l)))
}

pub fn mcrb_ask_finite_l(base_mcrb: f64, l_symbols: u64) -> Result<f64> {
    Ok(base_mcrb * finite_l_factor(l_symbols)?)
}

/// Minimum detectable tag speed in m/s.
pub fn v_min(f_c: f64, p_err: f64, c_t: f64, ps_n0_linear: f64) -> Result<f64> {
    check_carrier(f_c)?;
    check_positive("timing factor", c_t)?;
    check_positive("P_S/N0", ps_n0_linear)?;
    let q = separation_quantile(p_err)?;
    Ok(SPEED_OF_LIGHT * q / (PI * f_c) * (3.0 / c_t / ps_n0_linear).sqrt())
}

/// `P_S/N0` (dB-Hz) at which `v` is exactly the minimum detectable speed.
pub fn required_ps_n0(v: f64, c_t: f64, f_c: f64, p_err: f64) -> Result<f64> {
    check_positive("speed", v)?;
    check_carrier(f_c)?;
    check_positive("timing factor", c_t)?;
    let q = separation_quantile(p_err)?;
    let k = SPEED_OF_LIGHT * q / (PI * f_c * v);
    Ok(linear_to_db(3.0 * k * k / c_t))
}

/// Received tag power (dBm) needed for detection at `v` with noise figure `nf_db`.
pub fn required_ps_dbm(v: f64, c_t: f64, f_c: f64, p_err: f64, nf_db: f64) -> Result<f64> {
    Ok(required_ps_n0(v, c_t, f_c, p_err)? + noise_density_dbm_hz(nf_db))
}

/// `P_S/N0` (dB-Hz) a binary orthogonal receiver needs for bit error rate `ber`.
pub fn ps_n0_from_ber(blf_hz: f64, spread_factor: u32, ber: f64) -> Result<f64> {
    check_positive("BLF", blf_hz)?;
    if spread_factor == 0 {
        return Err(Error::Domain("spread factor must be positive".into()));
    }
    if !(ber > 0.0 && ber < 0.5) {
        return Err(Error::Domain(format!(
            "bit error rate must lie in (0, 0.5), got {ber}"
        )));
    }
    let q = erf_inv(1.0 - 2.0 * ber)?;
    Ok(linear_to_db(
        2.0 * blf_hz * q * q / f64::from(spread_factor),
    ))
}

/// Noise density and noise figure implied by a published sensitivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub n0_dbm_hz: f64,
    pub nf_db: f64,
    pub ps_n0_dbhz: f64,
}

pub fn noise_density_from_sensitivity(
    p_s_dbm: f64,
    ber: f64,
    blf_hz: f64,
    spread_factor: u32,
) -> Result<NoiseEstimate> {
    let ratio = ps_n0_from_ber(blf_hz, spread_factor, ber)?;
    let n0 = p_s_dbm - ratio;
    Ok(NoiseEstimate {
        n0_dbm_hz: n0,
        nf_db: n0 - THERMAL_NOISE_DBM_HZ,
        ps_n0_dbhz: ratio,
    })
}

/// Classification error of the half-Doppler threshold rule for a Gaussian
/// estimate with variance `sigma_sq`.
pub fn p_err_from_sigma(sigma_sq: f64, v: f64, f_c: f64) -> Result<f64> {
    check_positive("variance", sigma_sq)?;
    check_carrier(f_c)?;
    let mu = doppler_shift(v.abs(), f_c);
    let x = mu / 2.0;
    Ok(0.5 * (1.0 + erf((x - mu) / (2.0 * sigma_sq).sqrt())))
}
