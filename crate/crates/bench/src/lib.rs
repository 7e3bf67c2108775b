//! Shared inputs for the criterion benchmarks in `benches/`.

use entropic_bespoke::calibration::expected_payoffs;
use entropic_bespoke::loss::build_conditional_prior;
use entropic_bespoke::prior::build_market_grid;
use entropic_bespoke::synthetic::SyntheticIndex;
use entropic_bespoke::{
    Bucket, ConditionalLossDist, FactorParams, IndexId, LossGrid, MarketFactorGrid, PortfolioSet, PricingConstraint,
    Result,
};

/// Two synthetic indices of `names` names each (40% relevant), horizons 1, 3 and 5 years.
pub fn portfolio_set(names: usize) -> Result<PortfolioSet> {
    let mut s = SyntheticIndex::new(names, names * 2 / 5, vec![0.01, 0.03, 0.05]);
    let one = s.build(IndexId::One)?;
    s.mean_default_probs = vec![0.015, 0.04, 0.07];
    s.loading = 0.5;
    let two = s.build(IndexId::Two)?;
    Ok(PortfolioSet {
        horizons: vec![1.0, 3.0, 5.0],
        params: FactorParams::new(0.5, 0.3)?,
        portfolios: [one, two],
    })
}

/// Prior conditionals, factor grid and a feasible constraint set for one horizon.
pub struct StaticProblem {
    pub grid: MarketFactorGrid,
    pub priors: Vec<ConditionalLossDist>,
    pub constraints: Vec<PricingConstraint>,
}

impl StaticProblem {
    /// Equity, mezzanine and relevant-total constraints per index with targets `(1 + shift)` times
    /// the prior values.
    pub fn new(set: &PortfolioSet, nodes: usize, horizon: usize, shift: f64) -> Result<Self> {
        let grid = build_market_grid(nodes, nodes, &set.params)?;
        let lg = LossGrid::fit(&[&set.portfolios[0], &set.portfolios[1]])?;
        let priors = set
            .portfolios
            .iter()
            .map(|p| build_conditional_prior(p, &set.params, &grid, &lg, horizon))
            .collect::<Result<Vec<_>>>()?;
        let mut constraints = Vec::new();
        for index in IndexId::ALL {
            constraints.push(PricingConstraint::tranche(index, 0.0, 0.03, 0.0, 1e-4)?);
            constraints.push(PricingConstraint::tranche(index, 0.03, 0.07, 0.0, 1e-4)?);
            constraints.push(PricingConstraint::total(index, Bucket::Relevant, 0.0, 1e-4)?);
        }
        let els = expected_payoffs(&constraints, grid.prior_weights(), &priors);
        for (c, el) in constraints.iter_mut().zip(els) {
            c.target_el = el * (1.0 + shift);
        }
        Ok(Self {
            grid,
            priors,
            constraints,
        })
    }

    pub fn prior_refs(&self) -> Vec<&ConditionalLossDist> {
        self.priors.iter().collect()
    }
}
