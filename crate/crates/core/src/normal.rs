//! Standard normal helpers.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

/// Probabilities passed to the inverse CDF are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-12;

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse standard normal CDF with the argument clamped away from 0 and 1.
pub fn inv_cdf(p: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // One Newton polish step on the tail that keeps most significant digits.
    if p < 0.5 {
        x - (cdf(x) - p) / pdf(x)
    } else {
        let q = 1.0 - p;
        x + (cdf(-x) - q) / pdf(x)
    }
}

/// Bivariate standard normal density with correlation `rho`.
pub fn bivariate_pdf(x: f64, y: f64, rho: f64) -> f64 {
    let det = 1.0 - rho * rho;
    let q = (x * x - 2.0 * rho * x * y + y * y) / det;
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}
