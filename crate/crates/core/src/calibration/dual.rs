//! Static minimum cross-entropy calibration through its convex dual.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::constraint::PricingConstraint;
use super::solver::{minimize, DualEvaluation, DualProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::loss::ConditionalLossDist;
use crate::prior::{IndexId, MarketFactorGrid};

/// Log-sum-exp moments of an exponentially tilted discrete measure.
#[derive(Debug, Clone)]
pub(crate) struct TiltMoments {
    pub log_z: f64,
    pub mean: Vec<f64>,
    /// Row-major `k x k` covariance, empty unless requested.
    pub cov: Vec<f64>,
}

/// Tilts `exp(log_q)` on the listed cells by `exp(lambda . payoff(cell))`.
///
/// `payoffs` is a row-major `cells x k` table; `support` lists `(cell, ln q)` pairs.
pub(crate) fn tilt_moments(
    support: &[(u32, f64)],
    payoffs: &[f64],
    lambdas: &[f64],
    with_cov: bool,
) -> TiltMoments {
    let k = lambdas.len();
    let exponents: Vec<f64> = support
        .iter()
        .map(|&(cell, lq)| {
            let row = &payoffs[cell as usize * k..cell as usize * k + k];
            lq + row.iter().zip(lambdas).map(|(f, l)| f * l).sum::<f64>()
        })
        .collect();
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if support.is_empty() || !max.is_finite() {
        return TiltMoments {
            log_z: if support.is_empty() { f64::NEG_INFINITY } else { max },
            mean: vec![0.0; k],
            cov: if with_cov { vec![0.0; k * k] } else { Vec::new() },
        };
    }
    let weights: Vec<f64> = exponents.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; k];
    for (&(cell, _), w) in support.iter().zip(&weights) {
        let row = &payoffs[cell as usize * k..cell as usize * k + k];
        mean.iter_mut().zip(row).for_each(|(m, f)| *m += w * f);
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = Vec::new();
    if with_cov {
        cov = vec![0.0; k * k];
        let mut dev = vec![0.0; k];
        for (&(cell, _), w) in support.iter().zip(&weights) {
            let row = &payoffs[cell as usize * k..cell as usize * k + k];
            dev.iter_mut().zip(row.iter().zip(&mean)).for_each(|(d, (f, m))| *d = f - m);
            for a in 0..k {
                let wa = w * dev[a];
                for b in a..k {
                    cov[a * k + b] += wa * dev[b];
                }
            }
        }
        for a in 0..k {
            for b in a..k {
                cov[a * k + b] /= total;
                cov[b * k + a] = cov[a * k + b];
            }
        }
    }
    TiltMoments {
        log_z: max + total.ln(),
        mean,
        cov,
    }
}

/// Numerically stable `ln sum exp(x)`.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Per-index data: the constraints on that index and the shifted payoff table.
#[derive(Debug, Clone)]
struct Block {
    positions: Vec<usize>,
    /// Row-major `cells x k` table of `F_k(cell) - EL_k`.
    payoffs: Vec<f64>,
    /// Per node, `(cell, ln Q(cell | m))` over the prior support.
    support: Vec<Vec<(u32, f64)>>,
}

impl Block {
    fn new(prior: &ConditionalLossDist, constraints: &[PricingConstraint]) -> Self {
        let positions: Vec<usize> = constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.index == prior.index())
            .map(|(i, _)| i)
            .collect();
        let (rl, cl) = prior.dims();
        let unit = prior.grid().unit;
        let mut payoffs = Vec::with_capacity(rl * cl * positions.len());
        for cell in 0..rl * cl {
            let (r, c) = prior.cell_coordinates(cell);
            for &p in &positions {
                let con = &constraints[p];
                payoffs.push(con.payoff(r as f64 * unit, c as f64 * unit) - con.target_el);
            }
        }
        let support = prior
            .slices()
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .filter(|(_, q)| **q > 0.0)
                    .map(|(cell, q)| (cell as u32, q.ln()))
                    .collect()
            })
            .collect();
        Self {
            positions,
            payoffs,
            support,
        }
    }

    fn lambdas(&self, all: &[f64]) -> Vec<f64> {
        self.positions.iter().map(|&p| all[p]).collect()
    }
}

/// The dual objective `log Z(lambda) + 1/2 sum lambda^2 sigma^2` of the static problem.
#[derive(Debug, Clone)]
pub struct StaticDual<'a> {
    prior_weights: &'a [f64],
    priors: Vec<&'a ConditionalLossDist>,
    constraints: Vec<PricingConstraint>,
    blocks: Vec<Block>,
    sigma_sq: Vec<f64>,
}

/// Checks priors against the grid and constraints against the priors.
pub(crate) fn validate_inputs(
    grid: &MarketFactorGrid,
    priors: &[&ConditionalLossDist],
    constraints: &[PricingConstraint],
) -> Result<()> {
    for (i, p) in priors.iter().enumerate() {
        if p.num_nodes() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: p.num_nodes(),
            });
        }
        if priors[..i].iter().any(|q| q.index() == p.index()) {
            return Err(Error::InvalidInput(format!("two priors for index {}", p.index())));
        }
    }
    for c in constraints {
        c.validate()?;
        if !priors.iter().any(|p| p.index() == c.index) {
            return Err(Error::InvalidConstraint(format!(
                "constraint {} refers to index {} without a prior",
                c.label(),
                c.index
            )));
        }
    }
    Ok(())
}

impl<'a> StaticDual<'a> {
    pub fn new(
        grid: &'a MarketFactorGrid,
        priors: &[&'a ConditionalLossDist],
        constraints: &[PricingConstraint],
    ) -> Result<Self> {
        validate_inputs(grid, priors, constraints)?;
        let blocks = priors.iter().map(|p| Block::new(p, constraints)).collect();
        Ok(Self {
            prior_weights: grid.prior_weights(),
            priors: priors.to_vec(),
            constraints: constraints.to_vec(),
            blocks,
            sigma_sq: constraints.iter().map(|c| c.sigma * c.sigma).collect(),
        })
    }

    pub fn constraints(&self) -> &[PricingConstraint] {
        &self.constraints
    }

    fn node_moments(&self, lambdas: &[f64], with_cov: bool) -> Vec<Vec<TiltMoments>> {
        let block_lambdas: Vec<Vec<f64>> = self.blocks.iter().map(|b| b.lambdas(lambdas)).collect();
        (0..self.prior_weights.len())
            .into_par_iter()
            .map(|m| {
                self.blocks
                    .iter()
                    .zip(&block_lambdas)
                    .map(|(b, l)| tilt_moments(&b.support[m], &b.payoffs, l, with_cov))
                    .collect()
            })
            .collect()
    }

    /// `ln Z_i(m, lambda)` per prior (outer) and node (inner).
    pub fn log_partition_functions(&self, lambdas: &[f64]) -> Vec<Vec<f64>> {
        let moments = self.node_moments(lambdas, false);
        (0..self.blocks.len())
            .map(|i| moments.iter().map(|node| node[i].log_z).collect())
            .collect()
    }

    /// Posterior factor weights `h_m` and `ln Z(lambda)` at `lambdas`.
    pub fn posterior_weights(&self, lambdas: &[f64]) -> (Vec<f64>, f64) {
        let logs = self.log_partition_functions(lambdas);
        let refs: Vec<&[f64]> = logs.iter().map(Vec::as_slice).collect();
        posterior_factor_weights(self.prior_weights, &refs)
    }

    pub fn objective_and_gradient(&self, lambdas: &[f64]) -> (f64, Vec<f64>) {
        let e = self.evaluate(lambdas, false);
        (e.value, e.gradient)
    }

    pub fn hessian(&self, lambdas: &[f64]) -> DMatrix<f64> {
        self.evaluate(lambdas, true).hessian.expect("hessian requested")
    }

    /// Tilted conditionals `P_i(X | m)` per prior at `lambdas`.
    pub fn tilted_conditionals(&self, lambdas: &[f64]) -> Result<Vec<ConditionalLossDist>> {
        self.priors
            .iter()
            .zip(&self.blocks)
            .map(|(prior, block)| {
                let l = block.lambdas(lambdas);
                let k = l.len();
                let (rl, cl) = prior.dims();
                let slices: Vec<Vec<f64>> = (0..prior.num_nodes())
                    .into_par_iter()
                    .map(|m| {
                        let support = &block.support[m];
                        let mut out = vec![0.0; rl * cl];
                        let exps: Vec<f64> = support
                            .iter()
                            .map(|&(cell, lq)| {
                                let row = &block.payoffs[cell as usize * k..cell as usize * k + k];
                                lq + row.iter().zip(&l).map(|(f, x)| f * x).sum::<f64>()
                            })
                            .collect();
                        let lz = log_sum_exp(exps.iter().copied());
                        for (&(cell, _), e) in support.iter().zip(&exps) {
                            out[cell as usize] = (e - lz).exp();
                        }
                        out
                    })
                    .collect();
                ConditionalLossDist::from_slices(prior.index(), *prior.grid(), rl, cl, slices)
            })
            .collect()
    }
}

impl DualProblem for StaticDual<'_> {
    fn dim(&self) -> usize {
        self.constraints.len()
    }

    fn evaluate(&self, lambdas: &[f64], with_hessian: bool) -> DualEvaluation {
        let n = self.constraints.len();
        let moments = self.node_moments(lambdas, with_hessian);
        let log_terms: Vec<f64> = moments
            .iter()
            .zip(self.prior_weights)
            .map(|(node, g)| {
                if *g > 0.0 {
                    g.ln() + node.iter().map(|t| t.log_z).sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let log_z = log_sum_exp(log_terms.iter().copied());
        let h: Vec<f64> = log_terms.iter().map(|t| (t - log_z).exp()).collect();

        // Posterior means of the shifted payoffs, one vector per block.
        let means: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mut acc = vec![0.0; b.positions.len()];
                for (node, w) in moments.iter().zip(&h) {
                    acc.iter_mut().zip(&node[i].mean).for_each(|(a, x)| *a += w * x);
                }
                acc
            })
            .collect();

        let mut gradient = vec![0.0; n];
        let mut penalty = 0.0;
        for (b, mean) in self.blocks.iter().zip(&means) {
            for (&p, mu) in b.positions.iter().zip(mean) {
                gradient[p] = mu + lambdas[p] * self.sigma_sq[p];
            }
        }
        for (l, s2) in lambdas.iter().zip(&self.sigma_sq) {
            penalty += 0.5 * l * l * s2;
        }

        let hessian = with_hessian.then(|| {
            let mut hess = DMatrix::zeros(n, n);
            for (node, w) in moments.iter().zip(&h) {
                if *w == 0.0 {
                    continue;
                }
                for (i, bi) in self.blocks.iter().enumerate() {
                    let ki = bi.positions.len();
                    let di: Vec<f64> = node[i].mean.iter().zip(&means[i]).map(|(a, b)| a - b).collect();
                    for (j, bj) in self.blocks.iter().enumerate().skip(i) {
                        let dj: Vec<f64> = node[j].mean.iter().zip(&means[j]).map(|(a, b)| a - b).collect();
                        for a in 0..ki {
                            for (b, &pb) in bj.positions.iter().enumerate() {
                                let mut v = di[a] * dj[b];
                                if i == j {
                                    v += node[i].cov[a * ki + b];
                                }
                                hess[(bi.positions[a], pb)] += w * v;
                            }
                        }
                    }
                }
            }
            // Fill the lower cross-index blocks by symmetry.
            for (i, bi) in self.blocks.iter().enumerate() {
                for bj in self.blocks.iter().skip(i + 1) {
                    for &pa in &bi.positions {
                        for &pb in &bj.positions {
                            hess[(pb, pa)] = hess[(pa, pb)];
                        }
                    }
                }
            }
            for (p, s2) in self.sigma_sq.iter().enumerate() {
                hess[(p, p)] += s2;
            }
            hess
        });

        DualEvaluation {
            value: log_z + penalty,
            gradient,
            hessian,
        }
    }
}

/// `ln Z_i(m, lambda)` per node for one prior and the constraints on its index.
pub fn partition_functions(
    prior: &ConditionalLossDist,
    constraints: &[PricingConstraint],
    lambdas: &[f64],
) -> Result<Vec<f64>> {
    if lambdas.len() != constraints.len() {
        return Err(Error::LengthMismatch {
            expected: constraints.len(),
            got: lambdas.len(),
        });
    }
    let block = Block::new(prior, constraints);
    let l = block.lambdas(lambdas);
    Ok((0..prior.num_nodes())
        .into_par_iter()
        .map(|m| tilt_moments(&block.support[m], &block.payoffs, &l, false).log_z)
        .collect())
}

/// Posterior factor weights `h_m ~ g_m prod_i Z_i(m)` from log partition functions, and `ln Z`.
pub fn posterior_factor_weights(prior_weights: &[f64], log_partitions: &[&[f64]]) -> (Vec<f64>, f64) {
    let terms: Vec<f64> = prior_weights
        .iter()
        .enumerate()
        .map(|(m, g)| {
            if *g > 0.0 {
                g.ln() + log_partitions.iter().map(|z| z[m]).sum::<f64>()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let log_z = log_sum_exp(terms.iter().copied());
    (terms.iter().map(|t| (t - log_z).exp()).collect(), log_z)
}

/// Outcome of a static calibration.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub constraints: Vec<PricingConstraint>,
    pub lambdas: Vec<f64>,
    pub prior_weights: Vec<f64>,
    pub posterior_weights: Vec<f64>,
    /// Posterior conditionals per index, in the order the priors were given.
    pub tilted: Vec<ConditionalLossDist>,
    /// Posterior expected payoff per constraint.
    pub model_els: Vec<f64>,
    /// `model - target` per constraint; equals `-lambda sigma^2` at the optimum.
    pub residuals: Vec<f64>,
    pub objective_value: f64,
    pub log_partition: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl CalibrationResult {
    pub fn tilted_for(&self, index: IndexId) -> Option<&ConditionalLossDist> {
        self.tilted.iter().find(|t| t.index() == index)
    }

    /// `model / target - 1`, or `None` for a zero target.
    pub fn relative_errors(&self) -> Vec<Option<f64>> {
        self.model_els
            .iter()
            .zip(&self.constraints)
            .map(|(m, c)| (c.target_el != 0.0).then(|| m / c.target_el - 1.0))
            .collect()
    }
}

/// Expected payoff of every constraint under the weights and conditionals given.
pub fn expected_payoffs(
    constraints: &[PricingConstraint],
    weights: &[f64],
    conditionals: &[ConditionalLossDist],
) -> Vec<f64> {
    constraints
        .iter()
        .map(|c| {
            let cond = conditionals
                .iter()
                .find(|d| d.index() == c.index)
                .expect("validated constraint index");
            weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(m, w)| w * cond.conditional_expectation(m, |r, x| c.payoff(r, x)))
                .sum()
        })
        .collect()
}

/// Full static calibration: tilts both the factor weights and the conditional loss laws.
pub fn calibrate(
    grid: &MarketFactorGrid,
    priors: &[&ConditionalLossDist],
    constraints: &[PricingConstraint],
    options: &SolverOptions,
) -> Result<CalibrationResult> {
    let dual = StaticDual::new(grid, priors, constraints)?;
    let solution = minimize(&dual, &vec![0.0; constraints.len()], options)?;
    let (posterior_weights, log_partition) = dual.posterior_weights(&solution.lambdas);
    let tilted = dual.tilted_conditionals(&solution.lambdas)?;
    let model_els = expected_payoffs(constraints, &posterior_weights, &tilted);
    let residuals = model_els.iter().zip(constraints).map(|(m, c)| m - c.target_el).collect();
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
