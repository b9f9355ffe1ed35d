//! Experiment configuration from flat `key = value` text.
//!
//! Values are collected into a raw map first (config file, then command-line
//! overrides, later entries winning) and resolved in one pass by
//! [`ConfigBuilder::build`]. Unknown keys are rejected.
//!
//! | key | default |
//! |-----|---------|
//! | `mode` | `Mode 290` |
//! | `blf_hz`, `encoding`, `trext`, `epc_bits` | from `mode` |
//! | `f_c_hz` | 868e6 |
//! | `p_err` | 1e-3 (comma list allowed) |
//! | `ps_n0_dbhz` | 52.8, unless `p_s_dbm` is given |
//! | `p_s_dbm`, `nf_db`, `n0_dbm_hz` | absent, -, -148.6 |
//! | `v_grid` | `log:0.01:10:61` |
//! | `v_m_per_s` | 1.0 (Doppler of simulated moving tags) |
//! | `trials`, `seed` | 1000, 1 |
//! | `waveform_model`, `modulation`, `parts` | gen2, ask, both |
//! | `sample_rate_hz` | 32 BLF |
//! | `search_halfwidth_hz` | 200 |
//! | `zero_absorb` | true |
//! | `ber` | 1e-3 |
//! | `sweep`, `grid` | ps_n0, 52.8 |
//! | `estimates`, `sigma_sq_hz2` | simulate, absent |

use std::collections::BTreeMap;

use crate::bounds::LinkBudget;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, WipeOptions, DEFAULT_SEARCH_HALFWIDTH_HZ};
use crate::kv;
use crate::par::Execution;
use crate::protocol::{EncodingScheme, ReaderMode, ReaderModeCatalog, ReplyParts};
use crate::signal::{default_sample_rate, Modulation, WaveformModel};

pub const DEFAULT_F_C_HZ: f64 = 868e6;
pub const DEFAULT_P_ERR: f64 = 1e-3;
pub const DEFAULT_PS_N0_DBHZ: f64 = 52.8;
pub const DEFAULT_N0_DBM_HZ: f64 = -148.6;
pub const DEFAULT_MODE: &str = "Mode 290";

const KEYS: &[&str] = &[
    "mode",
    "blf_hz",
    "encoding",
    "trext",
    "epc_bits",
    "f_c_hz",
    "p_err",
    "ps_n0_dbhz",
    "p_s_dbm",
    "nf_db",
    "n0_dbm_hz",
    "v_grid",
    "v_m_per_s",
    "trials",
    "seed",
    "waveform_model",
    "modulation",
    "parts",
    "sample_rate_hz",
    "search_halfwidth_hz",
    "zero_absorb",
    "ber",
    "sweep",
    "grid",
    "estimates",
    "sigma_sq_hz2",
];

/// Independent variable of an MCRB sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McrbSweep {
    /// `P_S/N0` in dB-Hz, reply timing from the mode.
    PsN0,
    /// Length of a single rect-model signal part, seconds.
    T0,
    /// Pause between RN16 and EPC, seconds.
    TPause,
}

impl McrbSweep {
    pub fn column(self) -> (&'static str, &'static str) {
        match self {
            McrbSweep::PsN0 => ("ps_n0_dbhz", "dB-Hz"),
            McrbSweep::T0 => ("t0_s", "s"),
            McrbSweep::TPause => ("t_pause_s", "s"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateSource {
    /// Full frame synthesis and periodogram estimation.
    Simulate,
    /// Gaussian estimates around the true shift.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub catalog: ReaderModeCatalog,
    pub mode: ReaderMode,
    pub f_c: f64,
    pub p_err: Vec<f64>,
    pub link: LinkBudget,
    pub v_grid: Vec<f64>,
    pub v: f64,
    pub trials: usize,
    pub seed: u64,
    pub model: WaveformModel,
    pub modulation: Modulation,
    pub parts: ReplyParts,
    pub sample_rate: f64,
    pub search_halfwidth: f64,
    pub zero_absorb: bool,
    pub ber: f64,
    pub sweep: McrbSweep,
    pub grid: Vec<f64>,
    pub estimates: EstimateSource,
    pub sigma_sq: Option<f64>,
    /// `n0_dbm_hz` used by power-domain figures.
    pub n0_dbm_hz: f64,
    pub execution: Execution,
    /// Keys explicitly given (file or overrides).
    pub explicit: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigBuilder::new().build().expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut b = ConfigBuilder::new();
        b.load_text(text)?;
        b.build()
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            search_halfwidth: self.search_halfwidth,
            ..EstimatorConfig::default()
        }
    }

    pub fn wipe(&self) -> WipeOptions {
        WipeOptions {
            zero_absorb: self.zero_absorb,
        }
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    pub fn validate(&self) -> Result<()> {
        self.mode
            .validate()
            .map_err(|e| Error::config("mode", e.to_string()))?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.f_c > 0.0) {
            return Err(Error::config("f_c_hz", "must be positive"));
        }
        if self.p_err.is_empty() || self.p_err.iter().any(|&p| !(p > 0.0 && p < 0.5)) {
            return Err(Error::config("p_err", "every value must lie in (0, 0.5)"));
        }
        check_grid("v_grid", &self.v_grid)?;
        if self.v_grid[0] <= 0.0 {
            return Err(Error::config("v_grid", "speeds must be positive"));
        }
        check_grid("grid", &self.grid)?;
        if !(self.v >= 0.0) {
            return Err(Error::config("v_m_per_s", "must be non-negative"));
        }
        if !(self.ber > 0.0 && self.ber < 0.5) {
            return Err(Error::config("ber", "must lie in (0, 0.5)"));
        }
        let min_rate = 4.0 * 2.0 * f64::from(self.mode.blf_hz);
        if self.sample_rate < min_rate {
            return Err(Error::config(
                "sample_rate_hz",
                format!("must be at least four samples per chip ({min_rate} Hz)"),
            ));
        }
        if !(self.search_halfwidth > 0.0) || self.search_halfwidth > self.sample_rate / 2.0 {
            return Err(Error::config(
                "search_halfwidth_hz",
                "must lie in (0, fs/2]",
            ));
        }
        if let Some(s) = self.sigma_sq {
            if !(s > 0.0) {
                return Err(Error::config("sigma_sq_hz2", "must be positive"));
            }
        }
        Ok(())
    }
}

fn check_grid(key: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::config(key, "grid is empty"));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(key, "grid values must be finite"));
    }
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(key, "grid must be strictly increasing"));
    }
    Ok(())
}

/// Parses `a, b, c`, `lin:start:stop:count` or `log:start:stop:count`.
pub fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>> {
    let v = value.trim();
    let spaced = |kind: &str, rest: &str| -> Result<Vec<f64>> {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(
                key,
                format!("expected {kind}:start:stop:count"),
            ));
        }
        let a = kv::parse_f64(key, parts[0])?;
        let b = kv::parse_f64(key, parts[1])?;
        let n = kv::parse_u64(key, parts[2])? as usize;
        if n == 0 {
            return Err(Error::config(key, "count must be positive"));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        let step = |i: usize| i as f64 / (n - 1) as f64;
        Ok(match kind {
            "lin" => (0..n).map(|i| a + (b - a) * step(i)).collect(),
            _ => {
                if a <= 0.0 || b <= 0.0 {
                    return Err(Error::config(key, "log grid bounds must be positive"));
                }
                let (la, lb) = (a.log10(), b.log10());
                (0..n)
                    .map(|i| 10f64.powf(la + (lb - la) * step(i)))
                    .collect()
            }
        })
    };
    let grid = if let Some(rest) = v.strip_prefix("lin:") {
        spaced("lin", rest)?
    } else if let Some(rest) = v.strip_prefix("log:") {
        spaced("log", rest)?
    } else {
        kv::parse_f64_list(key, v)?
    };
    check_grid(key, &grid)?;
    Ok(grid)
}

#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    raw: BTreeMap<String, String>,
    catalog: ReaderModeCatalog,
    execution: Execution,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        ConfigBuilder::default()
    }

    pub fn load_text(&mut self, text: &str) -> Result<&mut Self> {
        for e in kv::parse(text)? {
            self.set(&e.key, &e.value)?;
        }
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        if !KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        self.raw.insert(key.to_string(), value.trim().to_string());
        Ok(self)
    }

    /// Parses `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<&mut Self> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(pair, "expected key=value"))?;
        self.set(k.trim(), v)
    }

    pub fn extend_catalog(&mut self, text: &str) -> Result<&mut Self> {
        self.catalog.extend_from_str(text)?;
        Ok(self)
    }

    pub fn execution(&mut self, exec: Execution) -> &mut Self {
        self.execution = exec;
        self
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| kv::parse_f64(key, v))
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let label = self.get("mode").unwrap_or(DEFAULT_MODE);
        let mut mode = self
            .catalog
            .get(label)
            .map_err(|e| Error::config("mode", e.to_string()))?
            .clone();
        let mut custom = false;
        if let Some(v) = self.get("blf_hz") {
            let blf = kv::parse_f64("blf_hz", v)?;
            if blf.fract() != 0.0 || blf <= 0.0 || blf > f64::from(u32::MAX) {
                return Err(Error::config("blf_hz", "must be an integer frequency"));
            }
            mode.blf_hz = blf as u32;
            custom = true;
        }
        if let Some(v) = self.get("encoding") {
            mode.encoding = v.parse::<EncodingScheme>()?;
            custom = true;
        }
        if let Some(v) = self.get("trext") {
            mode.trext = kv::parse_bool("trext", v)?;
            custom = true;
        }
        if let Some(v) = self.get("epc_bits") {
            mode.epc_bits = kv::parse_u64("epc_bits", v)? as u32;
            custom = true;
        }
        if custom {
            mode.label = format!("{} BLF {} kHz", mode.encoding, f64::from(mode.blf_hz) / 1e3);
            mode.sensitivity_dbm = None;
        }
        mode.validate()
            .map_err(|e| Error::config("blf_hz/epc_bits", e.to_string()))?;

        let n0_dbm_hz = self.f64_or("n0_dbm_hz", DEFAULT_N0_DBM_HZ)?;
        let link = if let Some(v) = self.get("ps_n0_dbhz") {
            LinkBudget::from_ps_n0(kv::parse_f64("ps_n0_dbhz", v)?)
        } else if let Some(v) = self.get("p_s_dbm") {
            let ps = kv::parse_f64("p_s_dbm", v)?;
            match self.get("nf_db") {
                Some(nf) => LinkBudget::from_power_and_nf(ps, kv::parse_f64("nf_db", nf)?),
                None => LinkBudget::from_power_and_n0(ps, n0_dbm_hz),
            }
        } else {
            LinkBudget::from_ps_n0(DEFAULT_PS_N0_DBHZ)
        };

        let p_err = match self.get("p_err") {
            Some(v) => kv::parse_f64_list("p_err", v)?,
            None => vec![DEFAULT_P_ERR],
        };
        let v_grid = parse_grid("v_grid", self.get("v_grid").unwrap_or("log:0.01:10:61"))?;
        let sweep = match self.get("sweep").unwrap_or("ps_n0") {
            "ps_n0" => McrbSweep::PsN0,
            "t0" => McrbSweep::T0,
            "t_pause" => McrbSweep::TPause,
            other => {
                return Err(Error::config(
                    "sweep",
                    format!("expected ps_n0, t0 or t_pause, got `{other}`"),
                ))
            }
        };
        let default_grid = match sweep {
            McrbSweep::PsN0 => "52.8",
            McrbSweep::T0 => "log:1e-4:0.1:7",
            McrbSweep::TPause => "lin:0:0.01:6",
        };
        let grid = parse_grid("grid", self.get("grid").unwrap_or(default_grid))?;
        let estimates = match self.get("estimates").unwrap_or("simulate") {
            "simulate" => EstimateSource::Simulate,
            "gaussian" => EstimateSource::Gaussian,
            other => {
                return Err(Error::config(
                    "estimates",
                    format!("expected simulate or gaussian, got `{other}`"),
                ))
            }
        };
        let trials = match self.get("trials") {
            Some(v) => kv::parse_u64("trials", v)? as usize,
            None => 1000,
        };
        let seed = match self.get("seed") {
            Some(v) => kv::parse_u64("seed", v)?,
            None => 1,
        };
        let cfg = ExperimentConfig {
            catalog: self.catalog.clone(),
            sample_rate: self.f64_or("sample_rate_hz", default_sample_rate(mode.blf_hz))?,
            mode,
            f_c: self.f64_or("f_c_hz", DEFAULT_F_C_HZ)?,
            p_err,
            link,
            v_grid,
            v: self.f64_or("v_m_per_s", 1.0)?,
            trials,
            seed,
            model: self.get("waveform_model").unwrap_or("gen2").parse()?,
            modulation: self.get("modulation").unwrap_or("ask").parse()?,
            parts: self.get("parts").unwrap_or("both").parse()?,
            search_halfwidth: self.f64_or("search_halfwidth_hz", DEFAULT_SEARCH_HALFWIDTH_HZ)?,
            zero_absorb: self
                .get("zero_absorb")
                .map_or(Ok(true), |v| kv::parse_bool("zero_absorb", v))?,
            ber: self.f64_or("ber", 1e-3)?,
            sweep,
            grid,
            estimates,
            sigma_sq: self
                .get("sigma_sq_hz2")
                .map(|v| kv::parse_f64("sigma_sq_hz2", v))
                .transpose()?,
            n0_dbm_hz,
            execution: self.execution,
            explicit: self.raw.keys().cloned().collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
