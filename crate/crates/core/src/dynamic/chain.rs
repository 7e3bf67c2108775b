//! Nearest-neighbour Markov chains on the factor grid with a prescribed stationary law.

use crate::error::{Error, Result};
use crate::prior::MarketFactorGrid;

/// Sparse row-stochastic transition matrix `g(m' | m)` on the factor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorChainPrior {
    /// `rows[m]` lists `(m', probability)` with `m'` ascending.
    rows: Vec<Vec<(u32, f64)>>,
}

impl FactorChainPrior {
    pub fn identity(states: usize) -> Self {
        Self {
            rows: (0..states as u32).map(|m| vec![(m, 1.0)]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, m: usize) -> &[(u32, f64)] {
        &self.rows[m]
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from]
            .iter()
            .find(|(j, _)| *j as usize == to)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        self.rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; n];
                row.iter().for_each(|(j, p)| out[*j as usize] = *p);
                out
            })
            .collect()
    }

    /// One step `pi' = pi K`.
    pub fn step(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; pi.len()];
        for (row, w) in self.rows.iter().zip(pi) {
            row.iter().for_each(|(j, p)| out[*j as usize] += w * p);
        }
        out
    }
}

fn check_persistence(persistence: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&persistence) {
        return Err(Error::Config(format!("persistence must lie in [0, 1], got {persistence}")));
    }
    Ok(())
}

/// Proposal of one component: stay with probability `s`, else move to a uniformly chosen neighbour.
fn component_proposal(i: usize, j: usize, states: usize, s: f64) -> f64 {
    let degree = usize::from(i > 0) + usize::from(i + 1 < states);
    if degree == 0 {
        return if i == j { 1.0 } else { 0.0 };
    }
    if i == j {
        s
    } else if i.abs_diff(j) == 1 {
        (1.0 - s) / degree as f64
    } else {
        0.0
    }
}

/// Metropolis-Hastings birth-death chain on `0..weights.len()` with stationary law `weights`.
///
/// Off-diagonal moves are `(1 - s) min(1/deg_i, pi_j / (pi_i deg_j))`; the diagonal holds the rest.
pub fn birth_death_chain(weights: &[f64], persistence: f64) -> Result<FactorChainPrior> {
    check_persistence(persistence)?;
    let n = weights.len();
    let rows = (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(3);
            let mut moved = 0.0;
            for j in [i.wrapping_sub(1), i + 1] {
                if j < n {
                    let forward = component_proposal(i, j, n, persistence);
                    let back = component_proposal(j, i, n, persistence);
                    let p = forward.min(weights[j] * back / weights[i]);
                    if p > 0.0 {
                        row.push((j as u32, p));
                        moved += p;
                    }
                }
            }
            row.push((i as u32, 1.0 - moved));
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    Ok(FactorChainPrior { rows })
}

/// Two-dimensional chain on the factor grid whose stationary law is the grid's prior weights.
///
/// Proposals are products of the component birth-death proposals; acceptance is
/// Metropolis-Hastings against the joint weights, so correlated factors stay stationary.
pub fn build_factor_chain_prior(grid: &MarketFactorGrid, persistence: f64) -> Result<FactorChainPrior> {
    check_persistence(persistence)?;
    let (n1, n2) = grid.shape();
    let g = grid.prior_weights();
    let proposal = |a: (usize, usize), b: (usize, usize)| {
        component_proposal(a.0, b.0, n1, persistence) * component_proposal(a.1, b.1, n2, persistence)
    };
    let rows = (0..grid.len())
        .map(|m| {
            let (a1, a2) = grid.coordinates(m);
            let mut row = Vec::with_capacity(9);
            let mut moved = 0.0;
            for b1 in a1.saturating_sub(1)..=(a1 + 1).min(n1 - 1) {
                for b2 in a2.saturating_sub(1)..=(a2 + 1).min(n2 - 1) {
                    let j = grid.flat_index(b1, b2);
                    if j == m {
                        continue;
                    }
                    let forward = proposal((a1, a2), (b1, b2));
                    let p = if g[m] > 0.0 {
                        forward.min(g[j] * proposal((b1, b2), (a1, a2)) / g[m])
                    } else {
                        forward
                    };
                    if p > 0.0 {
                        row.push((j as u32, p));
                        moved += p;
                    }
                }
            }
            row.push((m as u32, (1.0 - moved).max(0.0)));
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    Ok(FactorChainPrior { rows })
}
