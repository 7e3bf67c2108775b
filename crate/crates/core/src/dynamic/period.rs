//! Period-by-period calibration of transition kernels and propagation of the joint law.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::chain::{build_factor_chain_prior, FactorChainPrior};
use super::increment::IndexIncrementModel;
use super::state::{DynamicState, StateKey, TimeGrid};
use crate::calibration::{log_sum_exp, minimize, tilt_moments, DualEvaluation, DualProblem, PricingConstraint, SolverOptions};
use crate::error::{Error, Result};
use crate::loss::{IndexPortfolio, LossGrid};
use crate::prior::{FactorParams, IndexId, MarketFactorGrid};

/// Default per-year probability that the factor chain proposes to stay put.
pub const DEFAULT_PERSISTENCE: f64 = 0.9;

/// Everything the bootstrap needs besides the constraints.
#[derive(Debug, Clone)]
pub struct DynamicSetup {
    /// Index 1 then index 2.
    pub portfolios: [IndexPortfolio; 2],
    pub params: FactorParams,
    pub grid: MarketFactorGrid,
    pub loss_grid: LossGrid,
    pub time_grid: TimeGrid,
    /// Per-year stay probability of the factor chain proposal.
    pub persistence: f64,
    /// Losses after the first period are rounded to multiples of this many units.
    pub coarsening: usize,
}

/// Prior transition ingredients of one period.
#[derive(Debug, Clone)]
pub struct PeriodPrior {
    pub period: usize,
    /// `None` in the first period, where the factor is drawn from the grid weights.
    pub chain: Option<FactorChainPrior>,
    pub models: [IndexIncrementModel; 2],
}

impl DynamicSetup {
    pub fn period_prior(&self, period: usize) -> Result<PeriodPrior> {
        if period >= self.time_grid.len() {
            return Err(Error::Config(format!(
                "period {period} beyond the {} horizons of the time grid",
                self.time_grid.len()
            )));
        }
        let chain = if period == 0 {
            None
        } else {
            let stay = self.persistence.powf(self.time_grid.period_length(period));
            Some(build_factor_chain_prior(&self.grid, stay)?)
        };
        let model = |p: &IndexPortfolio| {
            IndexIncrementModel::new(p, &self.params, &self.loss_grid, period, self.coarsening)
        };
        Ok(PeriodPrior {
            period,
            chain,
            models: [model(&self.portfolios[0])?, model(&self.portfolios[1])?],
        })
    }
}

/// Previous `(relevant, complement)` losses of one index and the next factor node.
pub type PairNode = ((u32, u32), u32);

#[derive(Debug, Clone)]
struct IndexBlock {
    positions: Vec<usize>,
    /// Row-major `cells x k` table of `F_k - EL_k`.
    payoffs: Vec<f64>,
    comp_len: usize,
    combos: Vec<PairNode>,
    /// Per combo, `(cell, ln Q(cell | m', X))`.
    supports: Vec<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone)]
struct Entry {
    key: StateKey,
    prob: f64,
    /// `(m', ln g(m' | m), combo id per index)`.
    moves: Vec<(u32, f64, [usize; 2])>,
}

/// Dual problem of one period: `sum_s P(s) ln Zhat(s) + 1/2 sum lambda^2 sigma^2`.
#[derive(Debug, Clone)]
pub struct PeriodProblem {
    period: usize,
    constraints: Vec<PricingConstraint>,
    sigma_sq: Vec<f64>,
    blocks: [IndexBlock; 2],
    entries: Vec<Entry>,
}

impl PeriodProblem {
    pub fn new(
        grid: &MarketFactorGrid,
        prior: &PeriodPrior,
        previous: &DynamicState,
        constraints: &[PricingConstraint],
        unit: f64,
    ) -> Result<Self> {
        for c in constraints {
            c.validate()?;
        }
        let start_row: Vec<(u32, f64)> = grid
            .prior_weights()
            .iter()
            .enumerate()
            .filter(|(_, g)| **g > 0.0)
            .map(|(m, g)| (m as u32, *g))
            .collect();
        let mut combo_ids: [BTreeMap<PairNode, usize>; 2] = [BTreeMap::new(), BTreeMap::new()];
        let mut entries = Vec::with_capacity(previous.len());
        for (key, &prob) in previous.entries() {
            if prob <= 0.0 {
                continue;
            }
            let row = match &prior.chain {
                None => start_row.as_slice(),
                Some(chain) => {
                    if key.node as usize >= chain.len() {
                        return Err(Error::InvalidInput(format!("state node {} outside the grid", key.node)));
                    }
                    chain.row(key.node as usize)
                }
            };
            let mut moves = Vec::with_capacity(row.len());
            for &(m, g) in row {
                if g <= 0.0 {
                    continue;
                }
                let mut ids = [0usize; 2];
                for index in IndexId::ALL {
                    let map = &mut combo_ids[index.position()];
                    let next = map.len();
                    ids[index.position()] = *map.entry((key.pair(index), m)).or_insert(next);
                }
                moves.push((m, g.ln(), ids));
            }
            entries.push(Entry {
                key: *key,
                prob,
                moves,
            });
        }

        let blocks = IndexId::ALL.map(|index| {
            let model = &prior.models[index.position()];
            let (rl, cl) = model.dims();
            let positions: Vec<usize> = constraints
                .iter()
                .enumerate()
                .filter(|(_, c)| c.index == index)
                .map(|(i, _)| i)
                .collect();
            let mut payoffs = Vec::with_capacity(rl * cl * positions.len());
            for cell in 0..rl * cl {
                let (r, c) = (cell / cl, cell % cl);
                for &p in &positions {
                    let con = &constraints[p];
                    payoffs.push(con.payoff(r as f64 * unit, c as f64 * unit) - con.target_el);
                }
            }
            let mut combos = vec![((0, 0), 0); combo_ids[index.position()].len()];
            for (combo, id) in &combo_ids[index.position()] {
                combos[*id] = *combo;
            }
            let supports = combos
                .par_iter()
                .map(|&((r, c), m)| {
                    model
                        .conditional_pmf(grid, m as usize, (r as usize, c as usize))
                        .into_iter()
                        .filter(|(_, q)| *q > 0.0)
                        .map(|(cell, q)| (cell, q.ln()))
                        .collect()
                })
                .collect();
            IndexBlock {
                positions,
                payoffs,
                comp_len: cl,
                combos,
                supports,
            }
        });
        Ok(Self {
            period: prior.period,
            constraints: constraints.to_vec(),
            sigma_sq: constraints.iter().map(|c| c.sigma * c.sigma).collect(),
            blocks,
            entries,
        })
    }

    fn block_lambdas(&self, lambdas: &[f64]) -> [Vec<f64>; 2] {
        [0, 1].map(|i| self.blocks[i].positions.iter().map(|&p| lambdas[p]).collect())
    }

    /// Posterior factor transition weights of one entry and its `ln Zhat`.
    fn factor_posterior(&self, entry: &Entry, log_z: &[Vec<f64>; 2]) -> (Vec<f64>, f64) {
        let terms: Vec<f64> = entry
            .moves
            .iter()
            .map(|(_, lg, ids)| lg + log_z[0][ids[0]] + log_z[1][ids[1]])
            .collect();
        let lz = log_sum_exp(terms.iter().copied());
        (terms.iter().map(|t| (t - lz).exp()).collect(), lz)
    }

    /// Kernel at `lambdas`: posterior factor transitions per state and tilted conditionals.
    pub fn kernel(&self, lambdas: &[f64]) -> PeriodKernel {
        let bl = self.block_lambdas(lambdas);
        let moments = self.combo_moments(&bl, false);
        let log_z = [0, 1].map(|i| moments[i].iter().map(|t| t.log_z).collect::<Vec<f64>>());
        let factor_transitions = self
            .entries
            .iter()
            .map(|e| {
                let (h, _) = self.factor_posterior(e, &log_z);
                let moves = e.moves.iter().zip(h).map(|((m, _, _), w)| (*m, w)).collect();
                (e.key, moves)
            })
            .collect();
        let conditionals = [0, 1].map(|i| {
            let b = &self.blocks[i];
            let k = bl[i].len();
            let tilted: Vec<Vec<(u32, u32, f64)>> = b
                .supports
                .par_iter()
                .zip(&log_z[i])
                .map(|(support, lz)| {
                    support
                        .iter()
                        .map(|&(cell, lq)| {
                            let row = &b.payoffs[cell as usize * k..cell as usize * k + k];
                            let e = lq + row.iter().zip(&bl[i]).map(|(f, l)| f * l).sum::<f64>();
                            let cl = b.comp_len as u32;
                            (cell / cl, cell % cl, (e - lz).exp())
                        })
                        .collect()
                })
                .collect();
            b.combos.iter().copied().zip(tilted).collect::<BTreeMap<_, _>>()
        });
        PeriodKernel {
            period: self.period,
            lambdas: lambdas.to_vec(),
            factor_transitions,
            conditionals,
        }
    }

    fn combo_moments(&self, bl: &[Vec<f64>; 2], with_cov: bool) -> [Vec<crate::calibration::TiltMoments>; 2] {
        [0, 1].map(|i| {
            let b = &self.blocks[i];
            b.supports
                .par_iter()
                .map(|s| tilt_moments(s, &b.payoffs, &bl[i], with_cov))
                .collect()
        })
    }
}

impl DualProblem for PeriodProblem {
    fn dim(&self) -> usize {
        self.constraints.len()
    }

    fn evaluate(&self, lambdas: &[f64], with_hessian: bool) -> DualEvaluation {
        let n = self.constraints.len();
        let bl = self.block_lambdas(lambdas);
        let moments = self.combo_moments(&bl, with_hessian);
        let log_z = [0, 1].map(|i| moments[i].iter().map(|t| t.log_z).collect::<Vec<f64>>());

        // Per previous state: P(s) ln Zhat(s), P(s) E[F - EL | s] and P(s) Cov(F | s).
        let per_entry = |e: &Entry| -> (f64, Vec<f64>, Option<Vec<f64>>) {
            let (h, lz) = self.factor_posterior(e, &log_z);
            let mut mean = vec![0.0; n];
            let node_means: Vec<Vec<f64>> = e
                .moves
                .iter()
                .map(|(_, _, ids)| {
                    let mut v = vec![0.0; n];
                    for i in 0..2 {
                        for (a, &p) in self.blocks[i].positions.iter().enumerate() {
                            v[p] = moments[i][ids[i]].mean[a];
                        }
                    }
                    v
                })
                .collect();
            for (v, w) in node_means.iter().zip(&h) {
                mean.iter_mut().zip(v).for_each(|(m, x)| *m += w * x);
            }
            let cov = with_hessian.then(|| {
                let mut cov = vec![0.0; n * n];
                for ((v, w), (_, _, ids)) in node_means.iter().zip(&h).zip(&e.moves) {
                    if *w == 0.0 {
                        continue;
                    }
                    let d: Vec<f64> = v.iter().zip(&mean).map(|(a, b)| a - b).collect();
                    for a in 0..n {
                        for b in 0..n {
                            cov[a * n + b] += w * d[a] * d[b];
                        }
                    }
                    for i in 0..2 {
                        let pos = &self.blocks[i].positions;
                        let k = pos.len();
                        let c = &moments[i][ids[i]].cov;
                        for a in 0..k {
                            for b in 0..k {
                                cov[pos[a] * n + pos[b]] += w * c[a * k + b];
                            }
                        }
                    }
                }
                cov.iter_mut().for_each(|x| *x *= e.prob);
                cov
            });
            mean.iter_mut().for_each(|x| *x *= e.prob);
            (e.prob * lz, mean, cov)
        };

        let mut value = 0.0;
        let mut gradient = vec![0.0; n];
        let mut hess = with_hessian.then(|| DMatrix::zeros(n, n));
        for batch in self.entries.chunks(PROPAGATION_BATCH) {
            let parts: Vec<(f64, Vec<f64>, Option<Vec<f64>>)> = batch.par_iter().map(per_entry).collect();
            for (v, mean, cov) in &parts {
                value += v;
                gradient.iter_mut().zip(mean).for_each(|(g, m)| *g += m);
                if let (Some(h), Some(c)) = (hess.as_mut(), cov) {
                    for a in 0..n {
                        for b in 0..n {
                            h[(a, b)] += c[a * n + b];
                        }
                    }
                }
            }
        }
        for p in 0..n {
            value += 0.5 * lambdas[p] * lambdas[p] * self.sigma_sq[p];
            gradient[p] += lambdas[p] * self.sigma_sq[p];
            if let Some(h) = hess.as_mut() {
                h[(p, p)] += self.sigma_sq[p];
            }
        }
        DualEvaluation {
            value,
            gradient,
            hessian: hess,
        }
    }
}

/// Posterior transition law of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodKernel {
    pub period: usize,
    pub lambdas: Vec<f64>,
    /// Per previous state, `(m', h(m' | m, X))`.
    pub factor_transitions: Vec<(StateKey, Vec<(u32, f64)>)>,
    /// Per index, `((x_rel, x_comp) previous, m')` to `(x_rel', x_comp', P)`.
    pub conditionals: [BTreeMap<PairNode, Vec<(u32, u32, f64)>>; 2],
}

impl PeriodKernel {
    /// Largest loss decrease any transition allows (zero for an arbitrage-free kernel).
    pub fn max_loss_decrease(&self) -> u32 {
        self.conditionals
            .iter()
            .flat_map(|map| {
                map.iter().flat_map(|(((r, c), _), cells)| {
                    cells
                        .iter()
                        .filter(|(_, _, p)| *p > 0.0)
                        .map(move |(r2, c2, _)| r.saturating_sub(*r2).max(c.saturating_sub(*c2)))
                })
            })
            .max()
            .unwrap_or(0)
    }
}

/// Previous states handled per parallel batch in the period dual and in [`propagate_marginal`];
/// bounds the memory held by unreduced per-state terms.
const PROPAGATION_BATCH: usize = 512;

/// `P(m', X') = sum_s P(s) h(m' | s) prod_i P_i(X_i' | m', X_i)`.
///
/// Contributions are summed in kernel order whatever the thread count.
pub fn propagate_marginal(state: &DynamicState, kernel: &PeriodKernel) -> Result<DynamicState> {
    let spread = |(key, moves): &(StateKey, Vec<(u32, f64)>)| -> Result<Vec<(StateKey, f64)>> {
        let prob = state.entries().get(key).copied().ok_or_else(|| {
            Error::InvalidInput(format!("kernel state {key:?} missing from the marginal"))
        })?;
        let mut out = Vec::new();
        for &(m, h) in moves {
            let w = prob * h;
            if w <= 0.0 {
                continue;
            }
            let lookup = |i: IndexId| {
                kernel.conditionals[i.position()]
                    .get(&(key.pair(i), m))
                    .ok_or_else(|| Error::InvalidInput(format!("kernel lacks a conditional for {key:?}")))
            };
            let p1 = lookup(IndexId::One)?;
            let p2 = lookup(IndexId::Two)?;
            for &(a, b, q1) in p1 {
                for &(c, d, q2) in p2 {
                    let p = w * q1 * q2;
                    if p > 0.0 {
                        out.push((StateKey { node: m, losses: [a, b, c, d] }, p));
                    }
                }
            }
        }
        Ok(out)
    };
    let mut entries = BTreeMap::new();
    for batch in kernel.factor_transitions.chunks(PROPAGATION_BATCH) {
        let parts: Vec<Vec<(StateKey, f64)>> = batch.par_iter().map(spread).collect::<Result<_>>()?;
        for part in parts {
            for (k, p) in part {
                *entries.entry(k).or_insert(0.0) += p;
            }
        }
    }
    DynamicState::from_entries(Some(kernel.period), state.unit, entries)
}

/// Calibrated outcome of one period.
#[derive(Debug, Clone)]
pub struct PeriodOutcome {
    pub kernel: PeriodKernel,
    pub state: DynamicState,
    pub constraints: Vec<PricingConstraint>,
    pub model_els: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Expected payoff of each constraint under a joint state.
pub fn state_expected_payoffs(state: &DynamicState, constraints: &[PricingConstraint]) -> Vec<f64> {
    let u = state.unit;
    constraints
        .iter()
        .map(|c| {
            state.expectation(|k| {
                let (r, x) = k.pair(c.index);
                c.payoff(r as f64 * u, x as f64 * u)
            })
        })
        .collect()
}

/// Calibrates the kernel of `period` from the previous joint law and propagates it.
pub fn calibrate_period(
    setup: &DynamicSetup,
    period: usize,
    previous: &DynamicState,
    constraints: &[PricingConstraint],
    options: &SolverOptions,
) -> Result<PeriodOutcome> {
    let prior = setup.period_prior(period)?;
    let problem = PeriodProblem::new(&setup.grid, &prior, previous, constraints, setup.loss_grid.unit)?;
    let solution = minimize(&problem, &vec![0.0; constraints.len()], options)?;
    let kernel = problem.kernel(&solution.lambdas);
    let state = propagate_marginal(previous, &kernel)?;
    let model_els = state_expected_payoffs(&state, constraints);
    let residuals = model_els.iter().zip(constraints).map(|(m, c)| m - c.target_el).collect();
    Ok(PeriodOutcome {
        kernel,
        state,
        constraints: constraints.to_vec(),
        model_els,
        residuals,
        objective_value: solution.value,
        iterations: solution.iterations,
        gradient_norm: solution.gradient_norm,
    })
}

/// Calibrates every period in turn; `constraints[n]` holds the quotes at horizon `n`.
pub fn bootstrap_all(
    setup: &DynamicSetup,
    constraints: &[Vec<PricingConstraint>],
    options: &SolverOptions,
) -> Result<Vec<PeriodOutcome>> {
    if constraints.len() != setup.time_grid.len() {
        return Err(Error::LengthMismatch {
            expected: setup.time_grid.len(),
            got: constraints.len(),
        });
    }
    let mut state = DynamicState::initial(setup.loss_grid.unit);
    let mut out = Vec::with_capacity(constraints.len());
    for (n, cs) in constraints.iter().enumerate() {
        log::info!("calibrating period {n} ({} states)", state.len());
        let outcome = calibrate_period(setup, n, &state, cs, options)?;
        state = outcome.state.clone();
        out.push(outcome);
    }
    Ok(out)
}
