//! Time grid and the sparse joint law of (factor node, sub-portfolio losses).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossDist;
use crate::prior::{Bucket, IndexId};

/// Strictly increasing positive reference maturities in years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    horizons: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizons: Vec<f64>) -> Result<Self> {
        if horizons.is_empty() {
            return Err(Error::Config("time grid needs at least one horizon".into()));
        }
        let mut previous = 0.0;
        for &t in &horizons {
            if !(t > previous) || !t.is_finite() {
                return Err(Error::Config(format!(
                    "horizons must be positive and strictly increasing, got {horizons:?}"
                )));
            }
            previous = t;
        }
        Ok(Self { horizons })
    }

    pub fn horizons(&self) -> &[f64] {
        &self.horizons
    }

    pub fn len(&self) -> usize {
        self.horizons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.horizons.is_empty()
    }

    /// `T_n - T_{n-1}` with `T_{-1} = 0`.
    pub fn period_length(&self, n: usize) -> f64 {
        self.horizons[n] - if n == 0 { 0.0 } else { self.horizons[n - 1] }
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(t: TimeGrid) -> Self {
        t.horizons
    }
}

/// Factor node and losses `[x11, x12, x21, x22]` in lattice units
/// (index 1 relevant, index 1 complement, index 2 relevant, index 2 complement).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey {
    pub node: u32,
    pub losses: [u32; 4],
}

impl StateKey {
    pub fn pair(&self, index: IndexId) -> (u32, u32) {
        let o = 2 * index.position();
        (self.losses[o], self.losses[o + 1])
    }

    pub fn loss(&self, index: IndexId, bucket: Bucket) -> u32 {
        let (r, c) = self.pair(index);
        match bucket {
            Bucket::Relevant => r,
            Bucket::Complement => c,
        }
    }
}

/// Joint law `P(m^n, X^n)` after period `n`, or the loss-free start before the first period.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub period: Option<usize>,
    /// Loss quantum in index-notional fractions.
    pub unit: f64,
    entries: BTreeMap<StateKey, f64>,
}

impl DynamicState {
    /// No losses in either portfolio; the node of the start key carries no meaning.
    pub fn initial(unit: f64) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            StateKey {
                node: 0,
                losses: [0; 4],
            },
            1.0,
        );
        Self {
            period: None,
            unit,
            entries,
        }
    }

    pub fn from_entries(period: Option<usize>, unit: f64, entries: BTreeMap<StateKey, f64>) -> Result<Self> {
        if entries.values().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidInput("negative state probability".into()));
        }
        Ok(Self { period, unit, entries })
    }

    pub fn entries(&self) -> &BTreeMap<StateKey, f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn expectation(&self, f: impl Fn(&StateKey) -> f64) -> f64 {
        self.entries.iter().map(|(k, p)| p * f(k)).sum()
    }

    /// Unconditional law of one index's total loss.
    pub fn index_loss(&self, index: IndexId) -> LossDist {
        self.loss_law(|k| {
            let (r, c) = k.pair(index);
            (r + c) as usize
        })
    }

    /// Unconditional law of one bucket's loss.
    pub fn bucket_loss(&self, index: IndexId, bucket: Bucket) -> LossDist {
        self.loss_law(|k| k.loss(index, bucket) as usize)
    }

    fn loss_law(&self, f: impl Fn(&StateKey) -> usize) -> LossDist {
        let mut pmf = Vec::new();
        for (k, p) in &self.entries {
            let x = f(k);
            if pmf.len() <= x {
                pmf.resize(x + 1, 0.0);
            }
            pmf[x] += p;
        }
        LossDist::new(self.unit, pmf)
    }

    /// Marginal weights of the factor nodes.
    pub fn factor_marginal(&self, nodes: usize) -> Vec<f64> {
        let mut out = vec![0.0; nodes];
        for (k, p) in &self.entries {
            out[k.node as usize] += p;
        }
        out
    }
}
