//! Bounds and Monte Carlo verification for Doppler-based motion detection of
//! UHF-RFID tags.
//!
//! * [`protocol`]: Gen2 uplink timing (symbol periods, reply lengths, pauses,
//!   reader modes).
//! * [`bounds`]: closed-form required variance, modified Cramér-Rao bound,
//!   minimum detectable speed and noise-figure back-solve.
//! * [`signal`]: complex-baseband backscatter reply synthesis with Doppler
//!   and calibrated AWGN.
//! * [`estimator`]: known-symbol wipe-off, periodogram Doppler estimation and
//!   the threshold classifier.
//! * [`experiments`]: seeded Monte Carlo sweeps and figure datasets as CSV.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod kv;
pub mod par;
pub mod protocol;
pub mod signal;
pub mod special;
pub mod units;

pub use error::{Error, Result};
