//! One-factor Gaussian-copula base-correlation pricer and strike mapping rules.

use serde::{Deserialize, Serialize};

use crate::calibration::PricingConstraint;
use crate::error::{Error, Result};
use crate::loss::{bucket_loss_pmf, mixture, IndexPortfolio, LossDist, LossGrid};
use crate::normal;
use crate::prior::{Bucket, NameSpec};
use crate::pricing::{el_on_coupon_dates, price_from_el_curve, DiscountCurve, TranchePricing, TrancheSpec};
use crate::quadrature;

/// Factor nodes used by the one-factor pricer.
pub const ONE_FACTOR_NODES: usize = 64;

/// Base correlation as a function of strike (or moneyness): monotone cubic through the
/// pillars, flat outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseCorrCurve {
    strikes: Vec<f64>,
    betas: Vec<f64>,
    slopes: Vec<f64>,
}

impl BaseCorrCurve {
    pub fn new(mut pillars: Vec<(f64, f64)>) -> Result<Self> {
        if pillars.is_empty() {
            return Err(Error::InvalidInput("base correlation curve needs a pillar".into()));
        }
        pillars.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pillars.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInput(format!("duplicate base correlation strike {}", w[0].0)));
            }
        }
        for &(k, b) in &pillars {
            if !(b > 0.0 && b < 1.0) || !k.is_finite() {
                return Err(Error::InvalidInput(format!("base correlation {b} at {k} must lie in (0, 1)")));
            }
        }
        let strikes: Vec<f64> = pillars.iter().map(|p| p.0).collect();
        let betas: Vec<f64> = pillars.iter().map(|p| p.1).collect();
        let slopes = fritsch_carlson_slopes(&strikes, &betas);
        Ok(Self { strikes, betas, slopes })
    }

    pub fn flat(beta: f64) -> Result<Self> {
        Self::new(vec![(0.0, beta)])
    }

    pub fn pillars(&self) -> Vec<(f64, f64)> {
        self.strikes.iter().copied().zip(self.betas.iter().copied()).collect()
    }

    pub fn beta(&self, k: f64) -> f64 {
        let n = self.strikes.len();
        if k <= self.strikes[0] {
            return self.betas[0];
        }
        if k >= self.strikes[n - 1] {
            return self.betas[n - 1];
        }
        let i = self.strikes.partition_point(|s| *s <= k) - 1;
        let (x0, x1) = (self.strikes[i], self.strikes[i + 1]);
        let (y0, y1) = (self.betas[i], self.betas[i + 1]);
        let h = x1 - x0;
        let t = (k - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * self.slopes[i + 1]
    }

    /// Central-difference slope of the interpolant.
    pub fn derivative(&self, k: f64) -> f64 {
        let h = 1e-6 * k.abs().max(1e-3);
        (self.beta(k + h) - self.beta(k - h)) / (2.0 * h)
    }
}

/// Monotone cubic Hermite slopes.
fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / d[i];
        let b = m[i + 1] / d[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * d[i];
            m[i + 1] = tau * b * d[i];
        }
    }
    m
}

/// A pool priced by the one-factor model: default probability and loss units per name.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFactorPool {
    pub probs: Vec<f64>,
    pub units: Vec<usize>,
    /// Loss quantum as a fraction of the pool notional.
    pub unit: f64,
}

impl OneFactorPool {
    /// Pool of names given as `(default probability, LGD as a fraction of pool notional)`.
    pub fn new(names: &[(f64, f64)], grid: &LossGrid) -> Result<Self> {
        for &(p, _) in names {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("default probability {p} outside [0, 1]")));
            }
        }
        Ok(Self {
            probs: names.iter().map(|n| n.0).collect(),
            units: names.iter().map(|n| grid.units_for(n.1)).collect(),
            unit: grid.unit,
        })
    }

    /// Names at one horizon, with LGDs as fractions of `reference_notional` on a lattice of
    /// step `unit / reference_notional`.
    pub fn from_names<'a>(
        names: impl IntoIterator<Item = &'a NameSpec>,
        horizon: usize,
        reference_notional: f64,
        unit: f64,
    ) -> Result<Self> {
        if !(reference_notional > 0.0) {
            return Err(Error::InvalidInput(format!("reference notional {reference_notional} must be positive")));
        }
        let grid = LossGrid::new(unit, 0)?;
        let mut probs = Vec::new();
        let mut units = Vec::new();
        for n in names {
            probs.push(n.default_prob(horizon)?);
            units.push(grid.units_for(n.lgd()));
        }
        Ok(Self {
            probs,
            units,
            unit: unit / reference_notional,
        })
    }

    /// Whole index at one horizon.
    pub fn from_index(portfolio: &IndexPortfolio, horizon: usize, unit: f64) -> Result<Self> {
        Self::from_names(&portfolio.names, horizon, 1.0, unit)
    }

    /// Union of the relevant buckets of several indices, on the bespoke notional.
    pub fn bespoke(portfolios: &[&IndexPortfolio], horizon: usize, unit: f64) -> Result<Self> {
        let notional: f64 = portfolios.iter().map(|p| p.bucket_notional(Bucket::Relevant)).sum();
        Self::from_names(
            portfolios.iter().flat_map(|p| p.bucket_names(Bucket::Relevant)),
            horizon,
            notional,
            unit,
        )
    }

    pub fn expected_loss(&self) -> f64 {
        self.probs.iter().zip(&self.units).map(|(p, u)| p * *u as f64).sum::<f64>() * self.unit
    }

    /// Loss law with every asset loaded `sqrt(beta)` on one Gaussian factor.
    pub fn loss_dist(&self, beta: f64) -> Result<LossDist> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidInput(format!("correlation {beta} must lie in [0, 1)")));
        }
        if beta == 0.0 {
            return Ok(LossDist::new(self.unit, bucket_loss_pmf(&self.probs, &self.units)));
        }
        let (nodes, weights) = quadrature::standard_normal_rule(ONE_FACTOR_NODES);
        let a = beta.sqrt();
        let s = (1.0 - beta).sqrt();
        let thresholds: Vec<f64> = self
            .probs
            .iter()
            .map(|p| if *p <= 0.0 || *p >= 1.0 { f64::NAN } else { normal::inv_cdf(*p) })
            .collect();
        let pmfs: Vec<Vec<f64>> = nodes
            .iter()
            .map(|z| {
                let cond: Vec<f64> = self
                    .probs
                    .iter()
                    .zip(&thresholds)
                    .map(|(p, c)| if c.is_nan() { *p } else { normal::cdf((c - a * z) / s) })
                    .collect();
                bucket_loss_pmf(&cond, &self.units)
            })
            .collect();
        Ok(LossDist::new(self.unit, mixture(&pmfs, &weights)?))
    }
}

/// `E[min(X, K)] / K` under flat correlation `beta`.
pub fn base_tranche_el(pool: &OneFactorPool, k: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!("base correlation {beta} must lie in (0, 1)")));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("base tranche strike {k} must be positive")));
    }
    let d = pool.loss_dist(beta)?;
    Ok(d.expectation(|x| x.min(k)) / k)
}

/// Unnormalised tranche loss `K_u E_u - K_d E_d` from the base tranches, each at its own correlation.
pub fn tranche_loss_from_base(pool: &OneFactorPool, k_d: f64, beta_d: f64, k_u: f64, beta_u: f64) -> Result<f64> {
    let upper = k_u * base_tranche_el(pool, k_u, beta_u)?;
    let lower = if k_d > 0.0 { k_d * base_tranche_el(pool, k_d, beta_d)? } else { 0.0 };
    Ok(upper - lower)
}

/// How a bespoke strike is translated to an index strike before reading the skew.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingRule {
    Absolute,
    Atm,
    ProbabilityMatching,
}

impl MappingRule {
    pub const ALL: [MappingRule; 3] = [MappingRule::Absolute, MappingRule::Atm, MappingRule::ProbabilityMatching];

    pub fn as_str(self) -> &'static str {
        match self {
            MappingRule::Absolute => "absolute",
            MappingRule::Atm => "atm",
            MappingRule::ProbabilityMatching => "probability_matching",
        }
    }
}

/// Fixed-point controls for probability matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MatchingOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

/// Index strike equivalent to bespoke strike `k_b`.
///
/// `index_law(beta)` and `bespoke_law(beta)` return the loss laws under flat correlation `beta`;
/// only probability matching calls them.
pub fn map_strike(
    rule: MappingRule,
    k_b: f64,
    bespoke_el: f64,
    index_el: f64,
    curve: &BaseCorrCurve,
    index_law: &dyn Fn(f64) -> Result<LossDist>,
    bespoke_law: &dyn Fn(f64) -> Result<LossDist>,
    options: &MatchingOptions,
) -> Result<f64> {
    match rule {
        MappingRule::Absolute => Ok(k_b),
        MappingRule::Atm => {
            if !(index_el > 0.0) || !(bespoke_el > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "ATM mapping needs positive expected losses, got index {index_el} and bespoke {bespoke_el}"
                )));
            }
            Ok(k_b * index_el / bespoke_el)
        }
        MappingRule::ProbabilityMatching => {
            let mut k = k_b;
            for _ in 0..options.max_iterations {
                let beta = curve.beta(k);
                let p = bespoke_law(beta)?.interpolated_cdf(k_b);
                let target = index_law(beta)?.interpolated_quantile(p).ok_or_else(|| {
                    Error::NoSolution(format!(
                        "probability {p} of bespoke losses below {k_b} is not reachable on the index"
                    ))
                })?;
                let next = (1.0 - options.damping) * target + options.damping * k;
                if (next - k).abs() < options.tolerance {
                    return Ok(next);
                }
                k = next;
            }
            Err(Error::NoSolution(format!(
                "probability matching for strike {k_b} did not settle in {} iterations",
                options.max_iterations
            )))
        }
    }
}

/// `(d beta / dK, d beta / dL)` when the skew depends on moneyness `x = K / L` only.
pub fn skew_partials(curve: &BaseCorrCurve, k: f64, l: f64) -> (f64, f64) {
    let dk = curve.derivative(k / l) / l;
    (dk, -(k / l) * dk)
}

/// Flat correlation reproducing `target` for a price function monotone in correlation.
pub fn implied_correlation(price: &dyn Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6, 0.999);
    let (flo, fhi) = (price(lo)? - target, price(hi)? - target);
    if flo * fhi > 0.0 {
        return Err(Error::NoSolution(format!(
            "target {target} outside the price range [{}, {}]",
            (flo + target).min(fhi + target),
            (flo + target).max(fhi + target)
        )));
    }
    let increasing = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = price(mid)? - target;
        if (f > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Base correlation reproducing a base-tranche EL `E[min(X, K)] / K`.
pub fn implied_base_correlation(pool: &OneFactorPool, k: f64, target_el: f64) -> Result<f64> {
    implied_correlation(&|b| base_tranche_el(pool, k, b), target_el)
}

/// Base-correlation curves per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseCorrSurface {
    pub slices: Vec<(f64, BaseCorrCurve)>,
}

impl BaseCorrSurface {
    pub fn new(mut slices: Vec<(f64, BaseCorrCurve)>) -> Result<Self> {
        slices.sort_by(|a, b| a.0.total_cmp(&b.0));
        if slices.is_empty() || slices.windows(2).any(|w| w[1].0 <= w[0].0) || !(slices[0].0 > 0.0) {
            return Err(Error::InvalidInput(
                "base correlation horizons must be positive and distinct".into(),
            ));
        }
        Ok(Self { slices })
    }

    pub fn horizons(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.0).collect()
    }
}

/// Strike-mapping inputs for pricing a bespoke pool off an index skew.
pub struct StrikeMapping<'a> {
    pub rule: MappingRule,
    pub index: &'a OneFactorPool,
    pub options: MatchingOptions,
}

/// Mapped index strike and base correlation used for bespoke strike `k`.
pub fn mapped_correlation(
    pool: &OneFactorPool,
    curve: &BaseCorrCurve,
    mapping: &StrikeMapping<'_>,
    k: f64,
) -> Result<(f64, f64)> {
    let index_law = |b: f64| mapping.index.loss_dist(b);
    let bespoke_law = |b: f64| pool.loss_dist(b);
    let k_i = map_strike(
        mapping.rule,
        k,
        pool.expected_loss(),
        mapping.index.expected_loss(),
        curve,
        &index_law,
        &bespoke_law,
        &mapping.options,
    )?;
    Ok((k_i, curve.beta(k_i)))
}

/// Unnormalised tranche loss `E[(X - K_d)^+ - (X - K_u)^+]` with each base tranche at its
/// mapped correlation.
pub fn skew_tranche_loss(
    pool: &OneFactorPool,
    curve: &BaseCorrCurve,
    mapping: &StrikeMapping<'_>,
    k_d: f64,
    k_u: f64,
) -> Result<f64> {
    let (_, beta_u) = mapped_correlation(pool, curve, mapping, k_u)?;
    let beta_d = if k_d > 0.0 { mapped_correlation(pool, curve, mapping, k_d)?.1 } else { beta_u };
    tranche_loss_from_base(pool, k_d, beta_d, k_u, beta_u)
}

/// Prices a tranche on `pools[h]` (one per surface horizon) off the skew surface.
pub fn price_skew_tranche(
    pools: &[OneFactorPool],
    index_pools: &[OneFactorPool],
    surface: &BaseCorrSurface,
    rule: MappingRule,
    tranche: &TrancheSpec,
    discount: &DiscountCurve,
) -> Result<TranchePricing> {
    tranche.validate()?;
    let n = surface.slices.len();
    if pools.len() != n || index_pools.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: pools.len().min(index_pools.len()),
        });
    }
    let width = tranche.k_u - tranche.k_d;
    let knots = surface
        .slices
        .iter()
        .zip(pools.iter().zip(index_pools))
        .map(|((t, curve), (pool, index))| {
            let mapping = StrikeMapping {
                rule,
                index,
                options: MatchingOptions::default(),
            };
            let loss = skew_tranche_loss(pool, curve, &mapping, tranche.k_d, tranche.k_u)?;
            Ok((*t, (loss / width).clamp(0.0, 1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let el = el_on_coupon_dates(&knots, tranche)?;
    price_from_el_curve(&el, tranche, discount)
}

/// Index constraints implied by a skew: one unnormalised tranche loss per consecutive strike
/// pair of `strikes` (starting at 0) plus both sub-portfolio totals.
pub fn skew_implied_constraints(
    portfolio: &IndexPortfolio,
    horizon: usize,
    unit: f64,
    curve: &BaseCorrCurve,
    strikes: &[f64],
    sigma: f64,
) -> Result<Vec<PricingConstraint>> {
    let pool = OneFactorPool::from_index(portfolio, horizon, unit)?;
    let mapping = StrikeMapping {
        rule: MappingRule::Absolute,
        index: &pool,
        options: MatchingOptions::default(),
    };
    let mut out = Vec::new();
    let mut k_d = 0.0;
    for &k_u in strikes {
        let loss = skew_tranche_loss(&pool, curve, &mapping, k_d, k_u)?;
        out.push(PricingConstraint::tranche(portfolio.index, k_d, k_u, loss, sigma)?);
        k_d = k_u;
    }
    for bucket in [Bucket::Relevant, Bucket::Complement] {
        let el = portfolio.bucket_expected_loss(bucket, horizon)?;
        out.push(PricingConstraint::total(portfolio.index, bucket, el, sigma)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pool(names: usize, p: f64) -> OneFactorPool {
        let lgd = 0.6 / names as f64;
        let grid = LossGrid::new(lgd, names).unwrap();
        OneFactorPool::new(&vec![(p, lgd); names], &grid).unwrap()
    }

    #[test]
    fn zero_correlation_matches_binomial() {
        let pl = pool(6, 0.1);
        let d = pl.loss_dist(1e-12).unwrap();
        for (j, q) in d.pmf.iter().enumerate() {
            let c = (1..=j).fold(1.0, |acc, i| acc * (6 - i + 1) as f64 / i as f64);
            let b = c * 0.1f64.powi(j as i32) * 0.9f64.powi(6 - j as i32);
            assert_abs_diff_eq!(*q, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn wide_strike_gives_scaled_el() {
        let pl = pool(8, 0.05);
        let el = pl.expected_loss();
        assert_abs_diff_eq!(base_tranche_el(&pl, 0.9, 0.3).unwrap(), el / 0.9, epsilon = 1e-12);
        assert_eq!(base_tranche_el(&pool(8, 0.0), 0.03, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn monotone_interpolation() {
        let c = BaseCorrCurve::new(vec![(0.03, 0.2), (0.07, 0.3), (0.1, 0.35), (0.15, 0.45), (0.3, 0.7)]).unwrap();
        let mut prev = c.beta(0.0);
        for i in 0..=400 {
            let b = c.beta(i as f64 * 0.001);
            assert!(b >= prev - 1e-15 && b > 0.0 && b < 1.0);
            prev = b;
        }
        assert_eq!(c.beta(0.01), 0.2);
        assert_eq!(c.beta(0.5), 0.7);
        assert_abs_diff_eq!(c.beta(0.07), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn mapping_examples() {
        let c = BaseCorrCurve::flat(0.3).unwrap();
        let never = |_: f64| -> Result<LossDist> { unreachable!() };
        let o = MatchingOptions::default();
        assert_eq!(map_strike(MappingRule::Absolute, 0.05, 0.1, 0.2, &c, &never, &never, &o).unwrap(), 0.05);
        assert_eq!(map_strike(MappingRule::Atm, 0.05, 0.06, 0.06, &c, &never, &never, &o).unwrap(), 0.05);
        assert_abs_diff_eq!(
            map_strike(MappingRule::Atm, 0.03, 0.06, 0.04, &c, &never, &never, &o).unwrap(),
            0.02,
            epsilon = 1e-15
        );
    }

    #[test]
    fn probability_matching_returns_a_fixed_point() {
        let curve = BaseCorrCurve::new(vec![(0.03, 0.15), (0.07, 0.25), (0.15, 0.4), (0.3, 0.6)]).unwrap();
        let index = pool(40, 0.05);
        let bespoke = pool(30, 0.08);
        let il = |b: f64| index.loss_dist(b);
        let bl = |b: f64| bespoke.loss_dist(b);
        let k_b = 0.06;
        let k_i = map_strike(
            MappingRule::ProbabilityMatching,
            k_b,
            bespoke.expected_loss(),
            index.expected_loss(),
            &curve,
            &il,
            &bl,
            &MatchingOptions::default(),
        )
        .unwrap();
        let b = curve.beta(k_i);
        let p = bespoke.loss_dist(b).unwrap().interpolated_cdf(k_b);
        let k_eq = index.loss_dist(b).unwrap().interpolated_quantile(p).unwrap();
        assert!((k_eq - k_i).abs() < 1e-7, "{k_eq} vs {k_i}");
    }

    #[test]
    fn skew_partial_examples() {
        let flat = BaseCorrCurve::flat(0.4).unwrap();
        assert_eq!(skew_partials(&flat, 0.05, 0.04), (0.0, 0.0));
        // beta(x) = 0.3 + 0.1 x is linear, so the cubic reproduces it exactly.
        let lin = BaseCorrCurve::new(vec![(0.0, 0.3), (1.0, 0.4), (2.0, 0.5)]).unwrap();
        let (dk, dl) = skew_partials(&lin, 0.06, 0.08);
        assert_abs_diff_eq!(dk, 1.25, epsilon = 1e-8);
        assert_abs_diff_eq!(dl, -(0.06 / 0.08) * dk, epsilon = 1e-12);
        let up = BaseCorrCurve::new(vec![(0.5, 0.2), (1.5, 0.4), (3.0, 0.7)]).unwrap();
        assert!(skew_partials(&up, 0.06, 0.05).1 <= 0.0);
    }

    #[test]
    fn skew_constraints_are_consistent() {
        use crate::synthetic::SyntheticIndex;
        let p = SyntheticIndex::new(20, 8, vec![0.05]).build(crate::prior::IndexId::One).unwrap();
        let unit = p.names[0].lgd();
        let flat = BaseCorrCurve::flat(0.3).unwrap();
        let cs = skew_implied_constraints(&p, 0, unit, &flat, &[0.03, 0.07, 1.0], 0.0).unwrap();
        assert_eq!(cs.len(), 5);
        // Under a flat skew the tranche losses add up to the index EL.
        let tranche_sum: f64 = cs[..3].iter().map(|c| c.target_el).sum();
        assert_abs_diff_eq!(tranche_sum, p.expected_loss(0).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(cs[3].target_el + cs[4].target_el, tranche_sum, epsilon = 1e-12);
    }

    #[test]
    fn single_bucket_bespoke_pool_rescales_units() {
        use crate::synthetic::SyntheticIndex;
        let p = SyntheticIndex::new(10, 4, vec![0.05]).build(crate::prior::IndexId::One).unwrap();
        let unit = p.names[0].lgd();
        let b = OneFactorPool::bespoke(&[&p], 0, unit).unwrap();
        assert_eq!(b.probs.len(), 4);
        assert_abs_diff_eq!(b.unit, unit / 0.4, epsilon = 1e-15);
        let el = p.bucket_expected_loss(Bucket::Relevant, 0).unwrap() / 0.4;
        assert_abs_diff_eq!(b.expected_loss(), el, epsilon = 1e-14);
    }

    #[test]
    fn implied_correlation_round_trip() {
        let pl = pool(50, 0.06);
        for &beta in &[0.1, 0.35, 0.7] {
            for &k in &[0.03, 0.1] {
                let el = base_tranche_el(&pl, k, beta).unwrap();
                let implied = implied_base_correlation(&pl, k, el).unwrap();
                assert!((implied - beta).abs() < 1e-6);
            }
        }
    }
}
