//! Relative entropy and conditional mutual information on the lattice.

use crate::error::{Error, Result};
use crate::loss::ConditionalLossDist;
use crate::prior::Bucket;

use super::dual::CalibrationResult;

/// `sum p ln(p / q)` over two pmfs of equal length.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: q.len(),
            got: p.len(),
        });
    }
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::InfiniteDivergence);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// KL divergence of the joint posterior `(h, P_i(.|m))` from the prior `(g, Q_i(.|m))`.
///
/// The joint law factorises given the node, so the divergence is the factor term plus the
/// `h`-weighted conditional terms of each index.
pub fn joint_kl(
    posterior_weights: &[f64],
    posterior: &[ConditionalLossDist],
    prior_weights: &[f64],
    prior: &[&ConditionalLossDist],
) -> Result<f64> {
    let mut kl = kl_divergence(posterior_weights, prior_weights)?;
    for p in posterior {
        let q = prior
            .iter()
            .find(|q| q.index() == p.index())
            .ok_or_else(|| Error::InvalidInput(format!("no prior for index {}", p.index())))?;
        for (m, h) in posterior_weights.iter().enumerate() {
            if *h > 0.0 {
                kl += h * kl_divergence(p.slice(m), q.slice(m))?;
            }
        }
    }
    Ok(kl)
}

/// KL divergence of a calibration result from the prior it was calibrated against.
pub fn kl_to_prior(result: &CalibrationResult, prior: &[&ConditionalLossDist]) -> Result<f64> {
    joint_kl(&result.posterior_weights, &result.tilted, &result.prior_weights, prior)
}

/// `I(X_rel; X_comp | m)` averaged over factor weights for one index.
pub fn conditional_mutual_information(weights: &[f64], cond: &ConditionalLossDist) -> Result<f64> {
    if weights.len() != cond.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: cond.num_nodes(),
            got: weights.len(),
        });
    }
    let (_, cl) = cond.dims();
    let mut total = 0.0;
    for (m, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        let rel = cond.marginal(m, Bucket::Relevant);
        let comp = cond.marginal(m, Bucket::Complement);
        let mut mi = 0.0;
        for (cell, &p) in cond.slice(m).iter().enumerate() {
            if p > 0.0 {
                let (r, c) = (cell / cl, cell % cl);
                mi += p * (p / (rel[r] * comp[c])).ln();
            }
        }
        total += w * mi.max(0.0);
    }
    Ok(total)
}
