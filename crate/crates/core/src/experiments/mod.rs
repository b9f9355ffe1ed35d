//! Monte Carlo runners, figure datasets and their configuration.

pub mod config;
pub mod csv;
pub mod detection;
pub mod figures;
pub mod mcrb;
pub mod reports;
pub mod seeding;
pub mod stats;

use num_rational::Ratio;

use crate::bounds::{c_t_for, c_t_single, finite_l_factor, mcrb_sigma_sq};
use crate::error::{Error, Result};
use crate::estimator::{estimate_doppler_with, wipe_modulation_with, EstimatorConfig, WipeOptions};
use crate::par::{map_indexed, Execution};
use crate::protocol::{reply_timing, ExactSeconds, ReaderMode, ReplyParts, ReplyTiming};
use crate::signal::{
    random_reply_bits, synthesize_rect_single, synthesize_reply, ChannelParams, Modulation,
    ReplySpec, WaveformModel,
};
use crate::units::db_to_linear;

pub use config::{ConfigBuilder, EstimateSource, ExperimentConfig, McrbSweep};
pub use csv::{Cell, Column, CsvTable};

/// Signal layout of one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameShape {
    /// A tag reply of `mode` (Gen2 or rect-model chips).
    Reply {
        mode: ReaderMode,
        timing: ReplyTiming,
        parts: ReplyParts,
        model: WaveformModel,
    },
    /// One rect-model part of length `t0` with `l_symbols` symbols.
    RectSingle { t0: ExactSeconds, l_symbols: usize },
}

/// Everything needed to simulate and estimate one frame, except the Doppler
/// shift and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSetup {
    pub shape: FrameShape,
    pub modulation: Modulation,
    pub ps_n0_dbhz: f64,
    pub sample_rate: f64,
    pub wipe: WipeOptions,
    pub estimator: EstimatorConfig,
}

/// Converts seconds to an exact duration with nanosecond resolution.
pub fn exact_seconds(t: f64) -> Result<ExactSeconds> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "duration must be finite and non-negative, got {t}"
        )));
    }
    Ok(Ratio::new((t * 1e9).round() as u64, 1_000_000_000))
}

impl TrialSetup {
    /// Reply frames of the configured mode.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(TrialSetup {
            shape: FrameShape::Reply {
                timing: reply_timing(&cfg.mode)?,
                mode: cfg.mode.clone(),
                parts: cfg.parts,
                model: cfg.model,
            },
            modulation: cfg.modulation,
            ps_n0_dbhz: cfg.link.ps_n0_dbhz,
            sample_rate: cfg.sample_rate,
            wipe: cfg.wipe(),
            estimator: cfg.estimator(),
        })
    }

    pub fn c_t(&self) -> Result<f64> {
        match &self.shape {
            FrameShape::Reply { timing, parts, .. } => c_t_for(timing, *parts),
            FrameShape::RectSingle { t0, .. } => c_t_single(crate::protocol::to_f64(*t0)),
        }
    }

    /// Bound the simulation is compared against: the MCRB, times the
    /// finite-L factor for a single rect-model ASK part.
    pub fn reference_bound(&self) -> Result<f64> {
        let base = mcrb_sigma_sq(self.c_t()?, db_to_linear(self.ps_n0_dbhz))?;
        if self.modulation != Modulation::Ask || !self.wipe.zero_absorb {
            return Ok(base);
        }
        let l = match &self.shape {
            FrameShape::RectSingle { l_symbols, .. } => Some(*l_symbols as u64),
            FrameShape::Reply {
                mode,
                parts,
                model: WaveformModel::RectAppendix,
                ..
            } => match parts {
                ReplyParts::Rn16 => Some(u64::from(crate::protocol::symbols_for(
                    mode,
                    crate::protocol::SignalKind::Rn16,
                )?)),
                ReplyParts::Epc => Some(u64::from(crate::protocol::symbols_for(
                    mode,
                    crate::protocol::SignalKind::Epc,
                )?)),
                ReplyParts::Both => None,
            },
            _ => None,
        };
        match l {
            Some(l) => Ok(base * finite_l_factor(l)?),
            None => Ok(base),
        }
    }

    /// Simulates one frame with Doppler shift `f_d` and returns the estimate.
    pub fn run(&self, f_d: f64, seed: u64) -> Result<f64> {
        let params = ChannelParams {
            f_d,
            ps_n0_dbhz: self.ps_n0_dbhz,
            sample_rate: self.sample_rate,
            seed,
        };
        let frame = match &self.shape {
            FrameShape::Reply {
                mode,
                timing,
                parts,
                model,
            } => {
                let (rn16, epc) = random_reply_bits(mode, seed);
                let spec = ReplySpec {
                    mode,
                    timing: *timing,
                    parts: *parts,
                    modulation: self.modulation,
                    model: *model,
                    bits_rn16: &rn16,
                    bits_epc: &epc,
                };
                synthesize_reply(&spec, &params)?
            }
            FrameShape::RectSingle { t0, l_symbols } => {
                synthesize_rect_single(*t0, *l_symbols, self.modulation, &params)?
            }
        };
        let wiped = wipe_modulation_with(&frame, self.wipe);
        Ok(estimate_doppler_with(&wiped, &self.estimator)?.f_hat)
    }

    /// Runs `trials` frames with seeds `trial_seed(master, grid_index, i)`.
    /// The returned estimates are in trial order.
    pub fn run_trials(
        &self,
        f_d: f64,
        master: u64,
        grid_index: usize,
        trials: usize,
        exec: Execution,
    ) -> Result<Vec<f64>> {
        map_indexed(exec, trials, |i| {
            self.run(f_d, seeding::trial_seed(master, grid_index, i))
        })
        .into_iter()
        .collect()
    }
}

/// Empirical statistics of a batch of Doppler estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalStats {
    pub trials: usize,
    pub mean_error: f64,
    pub variance: f64,
    /// Empirical variance over the reference bound.
    pub ratio: f64,
}

impl EmpiricalStats {
    pub fn from_estimates(estimates: &[f64], f_d: f64, bound: f64) -> Self {
        let s = stats::summarize(estimates);
        EmpiricalStats {
            trials: s.count,
            mean_error: s.mean - f_d,
            variance: s.variance,
            ratio: s.variance / bound,
        }
    }
}
