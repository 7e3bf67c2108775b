//! Loss lattices, conditional dichotomic loss distributions and the operations on them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prior::{conditional_default_prob, Bucket, FactorParams, IndexId, MarketFactorGrid, NameSpec};

/// Loss quantum (fraction of index notional) and the largest representable loss in units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGrid {
    pub unit: f64,
    pub max_units: usize,
}

impl LossGrid {
    pub fn new(unit: f64, max_units: usize) -> Result<Self> {
        if !(unit > 0.0) || !unit.is_finite() {
            return Err(Error::Config(format!("loss unit must be positive, got {unit}")));
        }
        Ok(Self { unit, max_units })
    }

    /// Chooses the smallest positive name LGD as unit and sizes the cap to the largest index.
    pub fn fit(portfolios: &[&IndexPortfolio]) -> Result<Self> {
        let unit = portfolios
            .iter()
            .flat_map(|p| p.names.iter())
            .map(NameSpec::lgd)
            .filter(|l| *l > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !unit.is_finite() {
            return Err(Error::Config("no name with positive loss given default".into()));
        }
        Self::with_unit(unit, portfolios)
    }

    /// Uses an explicit unit and sizes the cap to the largest index.
    pub fn with_unit(unit: f64, portfolios: &[&IndexPortfolio]) -> Result<Self> {
        let mut grid = Self::new(unit, 0)?;
        grid.max_units = portfolios
            .iter()
            .map(|p| p.names.iter().map(|n| grid.units_for(n.lgd())).sum::<usize>())
            .max()
            .unwrap_or(0);
        Ok(grid)
    }

    /// Integer loss units of one name: nearest integer, at least one for positive LGD.
    pub fn units_for(&self, lgd: f64) -> usize {
        if lgd <= 0.0 {
            return 0;
        }
        ((lgd / self.unit).round() as usize).max(1)
    }

    pub fn same_unit(&self, other: f64) -> bool {
        (self.unit - other).abs() <= 1e-12 * self.unit.max(other)
    }
}

/// The names of one index portfolio, split into relevant and complement buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPortfolio {
    pub index: IndexId,
    pub names: Vec<NameSpec>,
}

impl IndexPortfolio {
    pub fn new(index: IndexId, names: Vec<NameSpec>) -> Result<Self> {
        for n in &names {
            n.validate()?;
            if n.index != index {
                return Err(Error::InvalidName {
                    name: n.id.clone(),
                    reason: format!("belongs to index {} but was placed in index {index}", n.index),
                });
            }
        }
        Ok(Self { index, names })
    }

    /// Splits a mixed list of names into the two index portfolios.
    pub fn split(names: &[NameSpec]) -> Result<[IndexPortfolio; 2]> {
        let pick = |id: IndexId| names.iter().filter(|n| n.index == id).cloned().collect();
        Ok([
            IndexPortfolio::new(IndexId::One, pick(IndexId::One))?,
            IndexPortfolio::new(IndexId::Two, pick(IndexId::Two))?,
        ])
    }

    pub fn bucket_names(&self, bucket: Bucket) -> impl Iterator<Item = &NameSpec> {
        self.names.iter().filter(move |n| n.bucket == bucket)
    }

    /// Total notional weight of a bucket (fraction of index notional).
    pub fn bucket_notional(&self, bucket: Bucket) -> f64 {
        self.bucket_names(bucket).map(|n| n.notional_weight).sum()
    }

    /// Total units of loss a bucket can suffer.
    pub fn bucket_units(&self, bucket: Bucket, grid: &LossGrid) -> usize {
        self.bucket_names(bucket).map(|n| grid.units_for(n.lgd())).sum()
    }

    /// Analytic expected loss `sum_i p_i(T) LGD_i` of a bucket (fraction of index notional).
    pub fn bucket_expected_loss(&self, bucket: Bucket, horizon: usize) -> Result<f64> {
        self.bucket_names(bucket)
            .map(|n| Ok(n.default_prob(horizon)? * n.lgd()))
            .sum()
    }

    /// Analytic expected loss of the whole index.
    pub fn expected_loss(&self, horizon: usize) -> Result<f64> {
        Ok(self.bucket_expected_loss(Bucket::Relevant, horizon)?
            + self.bucket_expected_loss(Bucket::Complement, horizon)?)
    }
}

/// Loss pmf of independent Bernoulli names with integer loss units, by recursion over names.
pub fn bucket_loss_pmf(probs: &[f64], units: &[usize]) -> Vec<f64> {
    debug_assert_eq!(probs.len(), units.len());
    let total: usize = units.iter().sum();
    let mut pmf = vec![0.0; total + 1];
    pmf[0] = 1.0;
    let mut reach = 0usize;
    for (&p, &u) in probs.iter().zip(units) {
        if u == 0 || p <= 0.0 {
            continue;
        }
        let q = 1.0 - p;
        for x in (0..=reach).rev() {
            let mass = pmf[x];
            pmf[x] = mass * q;
            pmf[x + u] += mass * p;
        }
        reach += u;
    }
    pmf
}

/// Per factor state, the joint pmf of (relevant, complement) bucket losses of one index.
///
/// Slices are row-major: cell `x_rel * complement_len + x_comp`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLossDist {
    index: IndexId,
    grid: LossGrid,
    relevant_len: usize,
    complement_len: usize,
    slices: Vec<Vec<f64>>,
}

impl ConditionalLossDist {
    pub fn from_slices(
        index: IndexId,
        grid: LossGrid,
        relevant_len: usize,
        complement_len: usize,
        slices: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let cells = relevant_len * complement_len;
        for s in &slices {
            if s.len() != cells {
                return Err(Error::LengthMismatch {
                    expected: cells,
                    got: s.len(),
                });
            }
            let total: f64 = s.iter().sum();
            if s.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "conditional slice must be a pmf (sum {total})"
                )));
            }
        }
        Ok(Self {
            index,
            grid,
            relevant_len,
            complement_len,
            slices,
        })
    }

    pub fn index(&self) -> IndexId {
        self.index
    }

    pub fn grid(&self) -> &LossGrid {
        &self.grid
    }

    pub fn num_nodes(&self) -> usize {
        self.slices.len()
    }

    /// `(relevant units + 1, complement units + 1)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.relevant_len, self.complement_len)
    }

    pub fn slice(&self, m: usize) -> &[f64] {
        &self.slices[m]
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }

    /// `(x_rel, x_comp)` of a flat cell index.
    pub fn cell_coordinates(&self, cell: usize) -> (usize, usize) {
        (cell / self.complement_len, cell % self.complement_len)
    }

    pub fn marginal(&self, m: usize, bucket: Bucket) -> Vec<f64> {
        let slice = &self.slices[m];
        match bucket {
            Bucket::Relevant => slice.chunks(self.complement_len).map(|row| row.iter().sum()).collect(),
            Bucket::Complement => {
                let mut out = vec![0.0; self.complement_len];
                for row in slice.chunks(self.complement_len) {
                    out.iter_mut().zip(row).for_each(|(o, p)| *o += p);
                }
                out
            }
        }
    }

    /// Pmf of the index total loss `x_rel + x_comp` at node `m`.
    pub fn total_pmf(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.relevant_len + self.complement_len - 1];
        for (r, row) in self.slices[m].chunks(self.complement_len).enumerate() {
            for (c, p) in row.iter().enumerate() {
                out[r + c] += p;
            }
        }
        out
    }

    /// Conditional expectation of `f(x_rel, x_comp)` at node `m`, losses in index-notional fractions.
    pub fn conditional_expectation(&self, m: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
        let u = self.grid.unit;
        self.slices[m]
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(cell, p)| {
                let (r, c) = self.cell_coordinates(cell);
                p * f(r as f64 * u, c as f64 * u)
            })
            .sum()
    }
}

/// Prior conditional loss distribution of one index at one horizon: per node the outer
/// product of the two bucket pmfs, each built by recursion over names.
pub fn build_conditional_prior(
    portfolio: &IndexPortfolio,
    params: &FactorParams,
    grid: &MarketFactorGrid,
    loss_grid: &LossGrid,
    horizon: usize,
) -> Result<ConditionalLossDist> {
    let bucket_inputs = |bucket: Bucket| -> Result<(Vec<(f64, crate::prior::TwoFactorLoadings)>, Vec<usize>)> {
        let mut names = Vec::new();
        let mut units = Vec::new();
        for n in portfolio.bucket_names(bucket) {
            names.push((n.default_prob(horizon)?, n.loadings(params)?));
            units.push(loss_grid.units_for(n.lgd()));
        }
        Ok((names, units))
    };
    let (rel_names, rel_units) = bucket_inputs(Bucket::Relevant)?;
    let (comp_names, comp_units) = bucket_inputs(Bucket::Complement)?;
    let rel_total: usize = rel_units.iter().sum();
    let comp_total: usize = comp_units.iter().sum();
    if rel_total + comp_total > loss_grid.max_units {
        return Err(Error::Config(format!(
            "loss grid holds {} units but index {} needs {}",
            loss_grid.max_units,
            portfolio.index,
            rel_total + comp_total
        )));
    }
    let slices: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|m| {
            let z = grid.node(m);
            let probs = |names: &[(f64, crate::prior::TwoFactorLoadings)]| -> Vec<f64> {
                names.iter().map(|(p, l)| conditional_default_prob(*p, l, z)).collect()
            };
            let rel = bucket_loss_pmf(&probs(&rel_names), &rel_units);
            let comp = bucket_loss_pmf(&probs(&comp_names), &comp_units);
            outer(&rel, &comp)
        })
        .collect();
    Ok(ConditionalLossDist {
        index: portfolio.index,
        grid: *loss_grid,
        relevant_len: rel_total + 1,
        complement_len: comp_total + 1,
        slices,
    })
}

fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

/// A one-dimensional loss pmf on a lattice of step `unit`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossDist {
    /// Loss quantum as a fraction of the reference notional.
    pub unit: f64,
    pub pmf: Vec<f64>,
    pub horizon: Option<f64>,
}

impl LossDist {
    pub fn new(unit: f64, pmf: Vec<f64>) -> Self {
        Self {
            unit,
            pmf,
            horizon: None,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|x| x)
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(j, p)| p * f(j as f64 * self.unit))
            .sum()
    }

    /// `E[(X - K_d)^+ - (X - K_u)^+]`, the unnormalised tranche loss.
    pub fn tranche_loss(&self, k_d: f64, k_u: f64) -> f64 {
        self.expectation(|x| (x - k_d).max(0.0) - (x - k_u).max(0.0))
    }

    /// Lattice CDF `P(X <= j unit)` for every `j`.
    pub fn cdf_points(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.pmf
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect()
    }

    /// CDF linearly interpolated between lattice points.
    pub fn interpolated_cdf(&self, x: f64) -> f64 {
        let c = self.cdf_points();
        if x <= 0.0 {
            return c[0];
        }
        let pos = x / self.unit;
        let j = pos.floor() as usize;
        if j + 1 >= c.len() {
            return 1.0;
        }
        let frac = pos - j as f64;
        c[j] + frac * (c[j + 1] - c[j])
    }

    /// Inverse of [`interpolated_cdf`](Self::interpolated_cdf); `None` outside `[P(X = 0), 1)`.
    pub fn interpolated_quantile(&self, p: f64) -> Option<f64> {
        let c = self.cdf_points();
        if p < c[0] || p >= 1.0 {
            return None;
        }
        let j = c.partition_point(|v| *v <= p);
        // c[j-1] <= p < c[j]
        if j == 0 || j >= c.len() {
            return None;
        }
        let lo = c[j - 1];
        let hi = c[j];
        Some(((j - 1) as f64 + (p - lo) / (hi - lo)) * self.unit)
    }
}

/// Discrete convolution of two pmfs on a common lattice.
pub fn convolve_pmf(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Convolution of two loss distributions; the lattices must share the same unit.
pub fn convolve(a: &LossDist, b: &LossDist) -> Result<LossDist> {
    if (a.unit - b.unit).abs() > 1e-12 * a.unit.max(b.unit) {
        return Err(Error::LatticeMismatch(format!(
            "cannot convolve unit {} with unit {}",
            a.unit, b.unit
        )));
    }
    Ok(LossDist {
        unit: a.unit,
        pmf: convolve_pmf(&a.pmf, &b.pmf),
        horizon: a.horizon.or(b.horizon),
    })
}

/// `p(x) = sum_m h_m P(x | m)` over pmfs of possibly different lengths.
pub fn mixture(pmfs: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if pmfs.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: pmfs.len(),
            got: weights.len(),
        });
    }
    let len = pmfs.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![0.0; len];
    for (pmf, w) in pmfs.iter().zip(weights) {
        out.iter_mut().zip(pmf).for_each(|(o, p)| *o += w * p);
    }
    Ok(out)
}

/// Unconditional index total-loss distribution from conditional slices and factor weights.
pub fn mixture_unconditional(cond: &ConditionalLossDist, weights: &[f64]) -> Result<LossDist> {
    if weights.len() != cond.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: cond.num_nodes(),
            got: weights.len(),
        });
    }
    let totals: Vec<Vec<f64>> = (0..cond.num_nodes()).into_par_iter().map(|m| cond.total_pmf(m)).collect();
    Ok(LossDist::new(cond.grid().unit, mixture(&totals, weights)?))
}
