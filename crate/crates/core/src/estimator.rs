//! Known-symbol wipe-off and maximum-likelihood Doppler estimation.
//!
//! The estimator maximises the periodogram `|Σ x[n] exp(+j 2π f t_n)|²` over
//! the support mask. A zero-padded FFT of block-summed samples locates the
//! peak coarsely; safeguarded Newton iterations on the exact masked
//! periodogram then refine it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bounds::doppler_shift;
use crate::error::{Error, Result};
use crate::signal::{BackscatterState, BasebandFrame, Modulation};

pub const DEFAULT_SEARCH_HALFWIDTH_HZ: f64 = 200.0;
pub const DEFAULT_PADDING: usize = 8;
pub const DEFAULT_TOLERANCE_HZ: f64 = 1e-4;

/// Samples after modulation removal. Masked-out samples are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WipedSignal {
    pub samples: Vec<Complex64>,
    pub support_mask: Vec<bool>,
    pub sample_rate: f64,
    pub t_origin: f64,
}

impl WipedSignal {
    pub fn support_len(&self) -> usize {
        self.support_mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WipeOptions {
    /// For ASK, drop the absorb intervals (and their noise) from the support.
    pub zero_absorb: bool,
}

impl Default for WipeOptions {
    fn default() -> Self {
        WipeOptions { zero_absorb: true }
    }
}

pub fn wipe_modulation(frame: &BasebandFrame) -> WipedSignal {
    wipe_modulation_with(frame, WipeOptions::default())
}

/// Removes the known modulation: ASK absorb samples are zeroed and masked
/// out, PSK one-state samples are negated. The pause is always masked out.
pub fn wipe_modulation_with(frame: &BasebandFrame, opts: WipeOptions) -> WipedSignal {
    let states = frame.sample_states();
    let modulation = frame.truth.modulation;
    let mut samples = frame.samples.clone();
    let mut mask = vec![false; samples.len()];
    for ((s, m), state) in samples.iter_mut().zip(mask.iter_mut()).zip(states) {
        match (state, modulation) {
            (None, _) => {
                *s = Complex64::new(0.0, 0.0);
            }
            (Some(BackscatterState::Zero), Modulation::Ask) if opts.zero_absorb => {
                *s = Complex64::new(0.0, 0.0);
            }
            (Some(BackscatterState::One), Modulation::Psk) => {
                *s = -*s;
                *m = true;
            }
            (Some(_), _) => *m = true,
        }
    }
    WipedSignal {
        samples,
        support_mask: mask,
        sample_rate: frame.sample_rate,
        t_origin: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub search_halfwidth: f64,
    /// Zero-padding factor of the coarse transform (at least 8).
    pub padding: usize,
    pub tolerance: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            search_halfwidth: DEFAULT_SEARCH_HALFWIDTH_HZ,
            padding: DEFAULT_PADDING,
            tolerance: DEFAULT_TOLERANCE_HZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub f_hat: f64,
    /// Normalised periodogram peak, `|S|² / (N Σ|x|²)`, in `[0, 1]`.
    pub peak_value: f64,
    pub refinement_iterations: usize,
}

pub fn estimate_doppler(w: &WipedSignal, search_halfwidth: f64) -> Result<EstimateReport> {
    estimate_doppler_with(
        w,
        &EstimatorConfig {
            search_halfwidth,
            ..EstimatorConfig::default()
        },
    )
}

/// Periodogram value and its first two derivatives at `f`.
struct Periodogram<'a> {
    x: &'a [Complex64],
    fs: f64,
    /// index of the time reference
    n_ref: f64,
}

impl Periodogram<'_> {
    fn eval(&self, f: f64) -> (f64, f64, f64) {
        const ANCHOR: usize = 1024;
        let w = 2.0 * PI * f / self.fs;
        let step = Complex64::from_polar(1.0, w);
        let mut s0 = Complex64::new(0.0, 0.0);
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s2 = Complex64::new(0.0, 0.0);
        for (block, chunk) in self.x.chunks(ANCHOR).enumerate() {
            let base = (block * ANCHOR) as f64 - self.n_ref;
            let mut rot = Complex64::from_polar(1.0, w * base);
            for (k, &x) in chunk.iter().enumerate() {
                if x.re != 0.0 || x.im != 0.0 {
                    let tau = 2.0 * PI * (base + k as f64) / self.fs;
                    let v = x * rot;
                    // j tau v and (j tau)^2 v
                    let jv = Complex64::new(-v.im, v.re) * tau;
                    s0 += v;
                    s1 += jv;
                    s2 -= v * (tau * tau);
                }
                rot *= step;
            }
        }
        let p = s0.norm_sqr();
        let d1 = 2.0 * (s0.conj() * s1).re;
        let d2 = 2.0 * (s1.norm_sqr() + (s0.conj() * s2).re);
        (p, d1, d2)
    }
}

/// Two-stage periodogram maximisation over `[-halfwidth, halfwidth]`.
pub fn estimate_doppler_with(w: &WipedSignal, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    let fs = w.sample_rate;
    if !(cfg.search_halfwidth > 0.0) || cfg.search_halfwidth > fs / 2.0 {
        return Err(Error::Domain(format!(
            "search halfwidth must lie in (0, fs/2 = {}], got {}",
            fs / 2.0,
            cfg.search_halfwidth
        )));
    }
    let first = w.support_mask.iter().position(|&m| m);
    let last = w.support_mask.iter().rposition(|&m| m);
    let (first, last) = match (first, last) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Contract("support mask is empty".into())),
    };
    let x = &w.samples[first..=last];
    let hw = cfg.search_halfwidth;
    let padding = cfg.padding.max(DEFAULT_PADDING);

    // Coarse stage: block sums keep the searched band far below the
    // decimated Nyquist rate.
    let block = ((fs / (8.0 * hw)).floor() as usize).max(1);
    let dec_rate = fs / block as f64;
    let decimated: Vec<Complex64> = x.chunks(block).map(|c| c.iter().sum()).collect();
    let len = (padding * decimated.len()).next_power_of_two();
    let mut buf = decimated;
    buf.resize(len, Complex64::new(0.0, 0.0));
    // inverse transform gives Σ y[m] exp(+j 2π k m / len)
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let bin = dec_rate / len as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for (k, v) in buf.iter().enumerate() {
        let f = if k < len / 2 {
            k as f64
        } else {
            k as f64 - len as f64
        } * bin;
        if f.abs() <= hw && v.norm_sqr() > best.1 {
            best = (f, v.norm_sqr());
        }
    }
    let f_coarse = best.0;

    // Fine stage on the exact periodogram.
    let pg = Periodogram {
        x,
        fs,
        n_ref: (x.len() - 1) as f64 / 2.0,
    };
    let mut lo = (f_coarse - 1.5 * bin).max(-hw);
    let mut hi = (f_coarse + 1.5 * bin).min(hw);
    let mut f = f_coarse;
    let mut iterations = 0;
    let mut value = 0.0;
    for _ in 0..200 {
        iterations += 1;
        let (p, d1, d2) = pg.eval(f);
        value = p;
        if d1 > 0.0 {
            lo = f;
        } else {
            hi = f;
        }
        let newton = if d2 < 0.0 { f - d1 / d2 } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let moved = (next - f).abs();
        f = next;
        if moved < cfg.tolerance || hi - lo < cfg.tolerance {
            value = pg.eval(f).0;
            break;
        }
    }
    let energy: f64 = x.iter().map(|c| c.norm_sqr()).sum();
    let support = w.support_len() as f64;
    let peak_value = if energy > 0.0 {
        value / (support * energy)
    } else {
        0.0
    };
    Ok(EstimateReport {
        f_hat: f,
        peak_value,
        refinement_iterations: iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionClass {
    Static,
    Moving,
}

/// Moving iff `|f_hat|` reaches half the Doppler shift of `v_ref`; a tie
/// counts as moving.
pub fn classify_motion(f_hat: f64, v_ref: f64, f_c: f64) -> MotionClass {
    let threshold = doppler_shift(v_ref.abs(), f_c) / 2.0;
    if f_hat.abs() >= threshold {
        MotionClass::Moving
    } else {
        MotionClass::Static
    }
}
