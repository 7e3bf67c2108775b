//! Deterministic synthetic index portfolios for examples, tests and benchmarks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::IndexPortfolio;
use crate::prior::{Bucket, IndexId, NameSpec};

/// Recipe for a homogeneous-weight index with spread-out default probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticIndex {
    pub names: usize,
    /// The first `relevant` names go to the relevant bucket.
    pub relevant: usize,
    /// Average cumulative default probability per horizon.
    pub mean_default_probs: Vec<f64>,
    /// Name probabilities range over `mean * [1 - dispersion, 1 + dispersion]`.
    pub dispersion: f64,
    pub recovery: f64,
    pub loading: f64,
}

impl SyntheticIndex {
    pub fn new(names: usize, relevant: usize, mean_default_probs: Vec<f64>) -> Self {
        Self {
            names,
            relevant,
            mean_default_probs,
            dispersion: 0.5,
            recovery: 0.4,
            loading: 0.55,
        }
    }

    pub fn build(&self, index: IndexId) -> Result<IndexPortfolio> {
        if self.names == 0 || self.relevant > self.names {
            return Err(Error::InvalidInput(format!(
                "synthetic index needs 0 <= relevant ({}) <= names ({}) and names > 0",
                self.relevant, self.names
            )));
        }
        let weight = 1.0 / self.names as f64;
        let names = (0..self.names)
            .map(|i| {
                // Interleave so both buckets see the full range of credit quality.
                let rank = (i * 7919) % self.names;
                let t = if self.names > 1 {
                    rank as f64 / (self.names - 1) as f64
                } else {
                    0.5
                };
                let scale = 1.0 + self.dispersion * (2.0 * t - 1.0);
                NameSpec {
                    id: format!("I{}N{:03}", index.number(), i),
                    index,
                    bucket: if i < self.relevant { Bucket::Relevant } else { Bucket::Complement },
                    default_probs: self.mean_default_probs.iter().map(|p| (p * scale).min(0.999)).collect(),
                    recovery: self.recovery,
                    notional_weight: weight,
                    loading: self.loading,
                }
            })
            .collect();
        IndexPortfolio::new(index, names)
    }
}
