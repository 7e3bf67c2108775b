//! Calibration that tilts only the factor weights and keeps the prior conditionals.

use nalgebra::DMatrix;

use super::constraint::PricingConstraint;
use super::dual::{expected_payoffs, tilt_moments, validate_inputs, CalibrationResult};
use super::solver::{minimize, DualEvaluation, DualProblem, SolverOptions};
use crate::error::Result;
use crate::loss::ConditionalLossDist;
use crate::prior::MarketFactorGrid;

/// Dual of the factor-only problem: `ln sum_m g_m exp(lambda . (mu(m) - EL)) + 1/2 sum lambda^2 sigma^2`
/// with `mu_k(m)` the prior conditional expected payoff.
#[derive(Debug, Clone)]
pub struct FactorOnlyDual {
    support: Vec<(u32, f64)>,
    /// Row-major `nodes x k` table of `mu_k(m) - EL_k`.
    payoffs: Vec<f64>,
    sigma_sq: Vec<f64>,
}

impl FactorOnlyDual {
    pub fn new(
        grid: &MarketFactorGrid,
        priors: &[&ConditionalLossDist],
        constraints: &[PricingConstraint],
    ) -> Result<Self> {
        validate_inputs(grid, priors, constraints)?;
        let mut payoffs = Vec::with_capacity(grid.len() * constraints.len());
        for m in 0..grid.len() {
            for c in constraints {
                let prior = priors.iter().find(|p| p.index() == c.index).expect("validated");
                payoffs.push(prior.conditional_expectation(m, |r, x| c.payoff(r, x)) - c.target_el);
            }
        }
        let support = grid
            .prior_weights()
            .iter()
            .enumerate()
            .filter(|(_, g)| **g > 0.0)
            .map(|(m, g)| (m as u32, g.ln()))
            .collect();
        Ok(Self {
            support,
            payoffs,
            sigma_sq: constraints.iter().map(|c| c.sigma * c.sigma).collect(),
        })
    }

    /// Posterior factor weights at `lambdas`.
    pub fn weights(&self, lambdas: &[f64], nodes: usize) -> Vec<f64> {
        let lz = tilt_moments(&self.support, &self.payoffs, lambdas, false).log_z;
        let k = lambdas.len();
        let mut h = vec![0.0; nodes];
        for &(m, lg) in &self.support {
            let row = &self.payoffs[m as usize * k..m as usize * k + k];
            h[m as usize] = (lg + row.iter().zip(lambdas).map(|(f, l)| f * l).sum::<f64>() - lz).exp();
        }
        h
    }
}

impl DualProblem for FactorOnlyDual {
    fn dim(&self) -> usize {
        self.sigma_sq.len()
    }

    fn evaluate(&self, lambdas: &[f64], with_hessian: bool) -> DualEvaluation {
        let t = tilt_moments(&self.support, &self.payoffs, lambdas, with_hessian);
        let k = lambdas.len();
        let penalty: f64 = lambdas.iter().zip(&self.sigma_sq).map(|(l, s)| 0.5 * l * l * s).sum();
        let gradient = t.mean.iter().zip(lambdas.iter().zip(&self.sigma_sq)).map(|(m, (l, s))| m + l * s).collect();
        let hessian = with_hessian.then(|| {
            let mut h = DMatrix::from_row_slice(k, k, &t.cov);
            for (i, s) in self.sigma_sq.iter().enumerate() {
                h[(i, i)] += s;
            }
            h
        });
        DualEvaluation {
            value: t.log_z + penalty,
            gradient,
            hessian,
        }
    }
}

/// Factor-only calibration. Uses the same multiplier sign as [`super::calibrate`], so
/// `residual = -lambda sigma^2` holds for both.
pub fn factor_only_calibrate(
    grid: &MarketFactorGrid,
    priors: &[&ConditionalLossDist],
    constraints: &[PricingConstraint],
    options: &SolverOptions,
) -> Result<CalibrationResult> {
    let dual = FactorOnlyDual::new(grid, priors, constraints)?;
    let solution = minimize(&dual, &vec![0.0; constraints.len()], options)?;
    let posterior_weights = dual.weights(&solution.lambdas, grid.len());
    let tilted: Vec<ConditionalLossDist> = priors.iter().map(|p| (*p).clone()).collect();
    let model_els = expected_payoffs(constraints, &posterior_weights, &tilted);
    let residuals = model_els.iter().zip(constraints).map(|(m, c)| m - c.target_el).collect();
    let log_partition = tilt_moments(&dual.support, &dual.payoffs, &solution.lambdas, false).log_z;
    Ok(CalibrationResult {
        constraints: constraints.to_vec(),
        lambdas: solution.lambdas,
        prior_weights: grid.prior_weights().to_vec(),
        posterior_weights,
        tilted,
        model_els,
        residuals,
        objective_value: solution.value,
        log_partition,
        iterations: solution.iterations,
        gradient_norm: solution.gradient_norm,
    })
}
