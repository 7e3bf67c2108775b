use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::{Bucket, IndexId};

/// Softness used when a constraint does not specify one (expected-loss units).
pub const DEFAULT_SIGMA: f64 = 1e-4;

/// What a pricing constraint pays as a function of the index sub-portfolio losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Tranche loss `(X - K_low)^+ - (X - K_high)^+` on the index total loss.
    Tranche { k_low: f64, k_high: f64 },
    /// Total loss of one sub-portfolio.
    SubportfolioTotal(Bucket),
}

/// An expected-loss target with its softness `sigma` (zero means an exact constraint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingConstraint {
    pub index: IndexId,
    pub kind: ConstraintKind,
    /// Expected payoff as a fraction of index notional.
    pub target_el: f64,
    pub sigma: f64,
}

impl PricingConstraint {
    pub fn new(index: IndexId, kind: ConstraintKind, target_el: f64, sigma: f64) -> Result<Self> {
        let c = Self {
            index,
            kind,
            target_el,
            sigma,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn tranche(index: IndexId, k_low: f64, k_high: f64, target_el: f64, sigma: f64) -> Result<Self> {
        Self::new(index, ConstraintKind::Tranche { k_low, k_high }, target_el, sigma)
    }

    pub fn total(index: IndexId, bucket: Bucket, target_el: f64, sigma: f64) -> Result<Self> {
        Self::new(index, ConstraintKind::SubportfolioTotal(bucket), target_el, sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if let ConstraintKind::Tranche { k_low, k_high } = self.kind {
            if !(0.0 <= k_low && k_low < k_high && k_high <= 1.0) {
                return Err(Error::InvalidConstraint(format!(
                    "strikes must satisfy 0 <= K_low < K_high <= 1, got ({k_low}, {k_high})"
                )));
            }
        }
        if !(self.target_el >= 0.0) || !self.target_el.is_finite() {
            return Err(Error::InvalidConstraint(format!(
                "target EL {} must be finite and non-negative",
                self.target_el
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConstraint(format!("sigma {} must be non-negative", self.sigma)));
        }
        Ok(())
    }

    pub fn payoff(&self, x_relevant: f64, x_complement: f64) -> f64 {
        payoff_eval(&self.kind, x_relevant, x_complement)
    }

    /// Short human-readable label such as `0-3%` or `relevant`.
    pub fn label(&self) -> String {
        match self.kind {
            ConstraintKind::Tranche { k_low, k_high } => {
                format!("{}-{}%", trim_pct(k_low), trim_pct(k_high))
            }
            ConstraintKind::SubportfolioTotal(b) => b.as_str().to_string(),
        }
    }
}

fn trim_pct(k: f64) -> String {
    let s = format!("{:.4}", k * 100.0);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Generalised payoff of a constraint; losses are fractions of index notional.
pub fn payoff_eval(kind: &ConstraintKind, x_relevant: f64, x_complement: f64) -> f64 {
    match *kind {
        ConstraintKind::Tranche { k_low, k_high } => {
            let x = x_relevant + x_complement;
            (x - k_low).max(0.0) - (x - k_high).max(0.0)
        }
        ConstraintKind::SubportfolioTotal(Bucket::Relevant) => x_relevant,
        ConstraintKind::SubportfolioTotal(Bucket::Complement) => x_complement,
    }
}

/// True when an index's tranches tile `[0, 1]` and both sub-portfolio totals are present,
/// which makes the constraint set linearly dependent.
pub fn has_full_partition(constraints: &[PricingConstraint], index: IndexId) -> bool {
    let mut strikes: Vec<(f64, f64)> = constraints
        .iter()
        .filter(|c| c.index == index)
        .filter_map(|c| match c.kind {
            ConstraintKind::Tranche { k_low, k_high } => Some((k_low, k_high)),
            _ => None,
        })
        .collect();
    let totals = constraints
        .iter()
        .filter(|c| c.index == index && matches!(c.kind, ConstraintKind::SubportfolioTotal(_)))
        .count();
    if totals < 2 || strikes.is_empty() {
        return false;
    }
    strikes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut edge = 0.0;
    for (lo, hi) in strikes {
        if (lo - edge).abs() > 1e-12 {
            return false;
        }
        edge = hi;
    }
    (edge - 1.0).abs() <= 1e-12
}
