#![allow(dead_code)]

use entropic_bespoke::calibration::{expected_payoffs, ConstraintKind};
use entropic_bespoke::loss::build_conditional_prior;
use entropic_bespoke::prior::build_market_grid;
use entropic_bespoke::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn name(index: IndexId, bucket: Bucket, i: usize, p: f64, loading: f64, weight: f64) -> NameSpec {
    NameSpec {
        id: format!("{index}{}{i}", bucket.as_str()),
        index,
        bucket,
        default_probs: vec![p],
        recovery: 0.4,
        notional_weight: weight,
        loading,
    }
}

/// Index with `rel + comp` equal-weight names, random probabilities and loadings.
pub fn random_index(r: &mut ChaCha8Rng, index: IndexId, rel: usize, comp: usize) -> IndexPortfolio {
    let w = 1.0 / (rel + comp) as f64;
    let names = (0..rel + comp)
        .map(|i| {
            let bucket = if i < rel { Bucket::Relevant } else { Bucket::Complement };
            name(index, bucket, i, r.random_range(0.02..0.25), r.random_range(0.3..0.75), w)
        })
        .collect();
    IndexPortfolio::new(index, names).unwrap()
}

pub struct Instance {
    pub params: FactorParams,
    pub grid: MarketFactorGrid,
    pub loss_grid: LossGrid,
    pub portfolios: [IndexPortfolio; 2],
    pub priors: Vec<ConditionalLossDist>,
}

impl Instance {
    pub fn new(params: FactorParams, nodes: (usize, usize), portfolios: [IndexPortfolio; 2]) -> Self {
        let grid = build_market_grid(nodes.0, nodes.1, &params).unwrap();
        let loss_grid = LossGrid::fit(&[&portfolios[0], &portfolios[1]]).unwrap();
        let priors = portfolios
            .iter()
            .map(|p| build_conditional_prior(p, &params, &grid, &loss_grid, 0).unwrap())
            .collect();
        Self {
            params,
            grid,
            loss_grid,
            portfolios,
            priors,
        }
    }

    pub fn random(r: &mut ChaCha8Rng, max_names: usize, nodes: (usize, usize)) -> Self {
        let params = FactorParams::new(r.random_range(-0.5..0.9), r.random_range(0.0..0.6)).unwrap();
        let mut ps = IndexId::ALL.map(|i| {
            let rel = r.random_range(1..=max_names);
            let comp = r.random_range(1..=max_names);
            random_index(r, i, rel, comp)
        });
        // Keep loadings valid under the drawn (rho, alpha).
        for p in ps.iter_mut() {
            for n in p.names.iter_mut() {
                while n.loadings(&params).is_err() {
                    n.loading *= 0.8;
                }
            }
        }
        Self::new(params, nodes, ps)
    }

    pub fn prior_refs(&self) -> Vec<&ConditionalLossDist> {
        self.priors.iter().collect()
    }

    pub fn prior_el(&self, c: &PricingConstraint) -> f64 {
        let cond = &self.priors[c.index.position()];
        expected_payoffs(std::slice::from_ref(c), self.grid.prior_weights(), std::slice::from_ref(cond))[0]
    }

    /// Equity tranche `[0, k]` and the relevant total per index, targets shifted off the prior.
    pub fn constraints(&self, k: f64, shift: [f64; 2], sigma: f64) -> Vec<PricingConstraint> {
        let mut cs = Vec::new();
        for index in IndexId::ALL {
            for (j, kind) in [
                ConstraintKind::Tranche { k_low: 0.0, k_high: k },
                ConstraintKind::SubportfolioTotal(Bucket::Relevant),
            ]
            .into_iter()
            .enumerate()
            {
                let mut c = PricingConstraint::new(index, kind, 0.0, sigma).unwrap();
                c.target_el = self.prior_el(&c) * (1.0 + shift[j]);
                cs.push(c);
            }
        }
        cs
    }
}

/// `E[min(X, K)]` on the lattice points `K = j * unit`.
pub fn base_el_curve(pmf: &[f64]) -> Vec<f64> {
    (0..pmf.len())
        .map(|k| pmf.iter().enumerate().map(|(x, p)| p * x.min(k) as f64).sum())
        .collect()
}

/// Total-loss pmf of one index under node weights and conditionals.
pub fn total_pmf(weights: &[f64], cond: &ConditionalLossDist) -> Vec<f64> {
    let (rl, cl) = cond.dims();
    let mut out = vec![0.0; rl + cl - 1];
    for (m, w) in weights.iter().enumerate() {
        for (cell, p) in cond.slice(m).iter().enumerate() {
            let (r, c) = cond.cell_coordinates(cell);
            out[r + c] += w * p;
        }
    }
    out
}
