//! Normal-distribution helpers and interval estimates shared by the
//! quantizer, analysis and harness modules.

use libm::erfc;

/// Values below this are flushed to zero.
pub const TAIL_FLOOR: f64 = 1e-300;

/// Standard normal CDF, evaluated through `erfc` so both tails keep full
/// relative precision.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let v = 0.5 * erfc(-x / std::f64::consts::SQRT_2);
    if v < TAIL_FLOOR {
        0.0
    } else {
        v
    }
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes >= trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;
