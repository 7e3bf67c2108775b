//! One-period conditional loss-increment priors of a bucket.

use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::loss::{bucket_loss_pmf, IndexPortfolio, LossGrid};
use crate::prior::{conditional_default_prob, Bucket, FactorParams, MarketFactorGrid, TwoFactorLoadings};

/// Rounds `x` to the nearest multiple of `step`, capped at `cap`.
pub fn coarsen(x: usize, step: usize, cap: usize) -> usize {
    if step <= 1 {
        return x.min(cap);
    }
    (((x + step / 2) / step) * step).min(cap)
}

/// Per-bucket data needed to build increment pmfs at any node and previous loss.
#[derive(Debug, Clone)]
pub struct BucketIncrementModel {
    pub total_units: usize,
    pub names: usize,
    name_units: Vec<usize>,
    /// Cumulative default probability at the period end (used only for the first period).
    cumulative: Vec<f64>,
    /// Forward default probability over the period given survival to its start.
    forward: Vec<f64>,
    loadings: Vec<TwoFactorLoadings>,
    first_period: bool,
    coarsening: usize,
}

impl BucketIncrementModel {
    pub fn new(
        portfolio: &IndexPortfolio,
        bucket: Bucket,
        params: &FactorParams,
        loss_grid: &LossGrid,
        period: usize,
        coarsening: usize,
    ) -> Result<Self> {
        let mut name_units = Vec::new();
        let mut cumulative = Vec::new();
        let mut forward = Vec::new();
        let mut loadings = Vec::new();
        for n in portfolio.bucket_names(bucket) {
            name_units.push(loss_grid.units_for(n.lgd()));
            let end = n.default_prob(period)?;
            cumulative.push(end);
            forward.push(if period == 0 {
                end
            } else {
                let start = n.default_prob(period - 1)?;
                if end < start {
                    return Err(Error::InvalidName {
                        name: n.id.clone(),
                        reason: format!("default probabilities decrease between horizons {} and {period}", period - 1),
                    });
                }
                if start >= 1.0 {
                    0.0
                } else {
                    ((end - start) / (1.0 - start)).clamp(0.0, 1.0)
                }
            });
            loadings.push(n.loadings(params)?);
        }
        Ok(Self {
            total_units: name_units.iter().sum(),
            names: name_units.len(),
            name_units,
            cumulative,
            forward,
            loadings,
            first_period: period == 0,
            coarsening: coarsening.max(1),
        })
    }

    /// Bucket average of the node-conditional forward default probabilities.
    pub fn average_forward_prob(&self, z: (f64, f64)) -> f64 {
        if self.names == 0 {
            return 0.0;
        }
        self.forward
            .iter()
            .zip(&self.loadings)
            .map(|(q, l)| conditional_default_prob(*q, l, z))
            .sum::<f64>()
            / self.names as f64
    }

    /// Pmf of the loss at the period end as sparse `(units, probability)` pairs, ascending.
    ///
    /// The first period starts from zero loss and uses the name-level recursion; later periods
    /// use a homogenised surviving pool and coarsen the new loss (never below `previous`).
    pub fn transition(&self, z: (f64, f64), previous: usize) -> Vec<(u32, f64)> {
        if self.first_period {
            debug_assert_eq!(previous, 0);
            let probs: Vec<f64> = self
                .cumulative
                .iter()
                .zip(&self.loadings)
                .map(|(p, l)| conditional_default_prob(*p, l, z))
                .collect();
            return bucket_loss_pmf(&probs, &self.name_units)
                .into_iter()
                .enumerate()
                .filter(|(_, p)| *p > 0.0)
                .map(|(x, p)| (x as u32, p))
                .collect();
        }
        let pbar = self.average_forward_prob(z);
        homogenized_increment(self.total_units, self.names, previous, pbar)
            .into_iter()
            .fold(Vec::<(u32, f64)>::new(), |mut acc, (x, p)| {
                // Never round below the previous loss, which may sit off the coarse lattice.
                let x = coarsen(x, self.coarsening, self.total_units).max(previous) as u32;
                match acc.last_mut() {
                    Some(last) if last.0 == x => last.1 += p,
                    _ => acc.push((x, p)),
                }
                acc
            })
    }
}

/// Loss pmf at the period end for a homogenised pool.
///
/// With `R = total - previous` units left and average name size `total / names`, the pool has
/// `k = max(1, round(R / size))` equal survivors; `j ~ Bin(k, pbar)` of them default and the loss
/// grows by `round(j R / k)`.
pub fn homogenized_increment(total_units: usize, names: usize, previous: usize, pbar: f64) -> Vec<(usize, f64)> {
    let remaining = total_units.saturating_sub(previous);
    if remaining == 0 || names == 0 || pbar <= 0.0 {
        return vec![(previous, 1.0)];
    }
    let size = total_units as f64 / names as f64;
    let k = ((remaining as f64 / size).round() as u64).max(1);
    let pbar = pbar.min(1.0);
    let binom = Binomial::new(pbar, k).expect("probability in [0, 1]");
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(k as usize + 1);
    for j in 0..=k {
        let p = binom.pmf(j);
        if p <= 0.0 {
            continue;
        }
        let x = previous + ((j as f64 * remaining as f64 / k as f64).round() as usize);
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += p,
            _ => out.push((x, p)),
        }
    }
    out
}

/// Increment models of both buckets of one index.
#[derive(Debug, Clone)]
pub struct IndexIncrementModel {
    pub relevant: BucketIncrementModel,
    pub complement: BucketIncrementModel,
}

impl IndexIncrementModel {
    pub fn new(
        portfolio: &IndexPortfolio,
        params: &FactorParams,
        loss_grid: &LossGrid,
        period: usize,
        coarsening: usize,
    ) -> Result<Self> {
        Ok(Self {
            relevant: BucketIncrementModel::new(portfolio, Bucket::Relevant, params, loss_grid, period, coarsening)?,
            complement: BucketIncrementModel::new(portfolio, Bucket::Complement, params, loss_grid, period, coarsening)?,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.relevant.total_units + 1, self.complement.total_units + 1)
    }

    /// `Q_i(X' | m, X)` as sparse `(cell, probability)` pairs, cell `x_rel * comp_len + x_comp`.
    pub fn conditional_pmf(&self, grid: &MarketFactorGrid, node: usize, previous: (usize, usize)) -> Vec<(u32, f64)> {
        let z = grid.node(node);
        let rel = self.relevant.transition(z, previous.0);
        let comp = self.complement.transition(z, previous.1);
        let cl = self.complement.total_units as u32 + 1;
        let mut out = Vec::with_capacity(rel.len() * comp.len());
        for (r, pr) in &rel {
            for (c, pc) in &comp {
                out.push((r * cl + c, pr * pc));
            }
        }
        out
    }
}
