//! Error function, its complement and its inverse.
//!
//! `erf`/`erfc` follow the classic fdlibm rational approximations (error below
//! one ulp over the whole real line). `erf_inv` starts from Giles' single
//! precision approximation and polishes it with Halley steps against `erf`
//! (or `erfc` in the tails, so that `1 - y` keeps its relative precision).

// coefficients are kept exactly as published
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const ERX: f64 = 8.45062911510467529297e-01;
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;

const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

const VERY_TINY: f64 = 2.848094538889218e-306;
const SMALL: f64 = 3.725_290_298_461_914e-9; // 2^-28
const TINY: f64 = 1.387_778_780_781_445_7e-17; // 2^-56

/// 2 / sqrt(pi)
const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

#[inline]
fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `1 + x*(c0 + x*(c1 + ...))`
#[inline]
fn horner1(x: f64, coeffs: &[f64]) -> f64 {
    1.0 + x * horner(x, coeffs)
}

fn small_ratio(x: f64) -> f64 {
    let z = x * x;
    horner(z, &PP) / horner1(z, &QQ)
}

fn mid_ratio(x: f64) -> f64 {
    let s = x - 1.0;
    horner(s, &PA) / horner1(s, &QA)
}

/// `erfc(x)` for `1.25 <= x < 28`, computed as `exp(-x^2 - 0.5625 + R/S) / x`.
fn tail(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    let (r, q) = if x < 1.0 / 0.35 {
        (horner(s, &RA), horner1(s, &SA))
    } else {
        (horner(s, &RB), horner1(s, &SB))
    };
    // split x so that z*z is exact
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let e = (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / q).exp();
    e / x
}

/// The error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let r = if a < 0.84375 {
        if a < SMALL {
            if a < VERY_TINY {
                0.125 * (8.0 * a + EFX8 * a)
            } else {
                a + EFX * a
            }
        } else {
            a + a * small_ratio(a)
        }
    } else if a < 1.25 {
        ERX + mid_ratio(a)
    } else if a >= 6.0 {
        1.0
    } else {
        1.0 - tail(a)
    };
    r.copysign(x)
}

/// The complementary error function `1 - erf(x)`, accurate in the upper tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let neg = x < 0.0;
    let a = x.abs();
    if a < 0.84375 {
        let t = if a < TINY {
            a
        } else if a < 0.25 {
            a + a * small_ratio(a)
        } else {
            0.5 + (a * small_ratio(a) + (a - 0.5))
        };
        return if neg { 1.0 + t } else { 1.0 - t };
    }
    if a < 1.25 {
        let t = ERX + mid_ratio(a);
        return if neg { 1.0 + t } else { 1.0 - t };
    }
    if a < 28.0 {
        if neg && a > 6.0 {
            return 2.0;
        }
        let t = tail(a);
        return if neg { 2.0 - t } else { t };
    }
    if neg {
        2.0
    } else {
        0.0
    }
}

/// Giles (2010), "Approximating the erfinv function", single precision branch.
fn erf_inv_seed(y: f64) -> f64 {
    let mut w = -((1.0 - y) * (1.0 + y)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * y
}

/// Inverse error function on `(-1, 1)`.
///
/// `erf(erf_inv(y))` reproduces `y` to a relative error below `1e-12`.
pub fn erf_inv(y: f64) -> Result<f64> {
    if y.is_nan() || y.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "erf_inv argument must lie in (-1, 1), got {y}"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let a = y.abs();
    let mut x = erf_inv_seed(a);
    // Halley on f(x) = erf(x) - a, using erfc for a close to 1.
    let complement = 1.0 - a;
    for _ in 0..4 {
        let residual = if a > 0.5 {
            complement - erfc(x)
        } else {
            erf(x) - a
        };
        let slope = TWO_OVER_SQRT_PI * (-x * x).exp();
        if slope == 0.0 {
            break;
        }
        let dx = residual / slope;
        let step = dx / (1.0 + x * dx);
        x -= step;
        if step.abs() <= 1e-17 * x.abs() {
            break;
        }
    }
    Ok(x.copysign(y))
}
