//! Portfolio definition files (TOML).
//!
//! ```toml
//! horizons = [3.0, 5.0]
//!
//! [factor]
//! rho = 0.5
//! alpha = 0.3
//!
//! [[name]]
//! id = "A001"
//! index_id = 1
//! bucket = "relevant"
//! recovery = 0.4
//! notional_weight = 0.008
//! one_factor_loading = 0.55
//! default_probs = [0.02, 0.035]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::IndexPortfolio;
use crate::prior::{Bucket, FactorParams, IndexId, NameSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NameRecord {
    pub id: String,
    pub index_id: IndexId,
    pub bucket: Bucket,
    pub recovery: f64,
    pub notional_weight: f64,
    pub one_factor_loading: f64,
    pub default_probs: Vec<f64>,
}

impl From<&NameRecord> for NameSpec {
    fn from(r: &NameRecord) -> Self {
        NameSpec {
            id: r.id.clone(),
            index: r.index_id,
            bucket: r.bucket,
            default_probs: r.default_probs.clone(),
            recovery: r.recovery,
            notional_weight: r.notional_weight,
            loading: r.one_factor_loading,
        }
    }
}

impl From<&NameSpec> for NameRecord {
    fn from(n: &NameSpec) -> Self {
        NameRecord {
            id: n.id.clone(),
            index_id: n.index,
            bucket: n.bucket,
            recovery: n.recovery,
            notional_weight: n.notional_weight,
            one_factor_loading: n.loading,
            default_probs: n.default_probs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioFile {
    /// Model horizons in years; every name lists one default probability per horizon.
    pub horizons: Vec<f64>,
    pub factor: FactorParams,
    #[serde(rename = "name")]
    pub names: Vec<NameRecord>,
}

/// Validated contents of a portfolio file.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSet {
    pub horizons: Vec<f64>,
    pub params: FactorParams,
    /// Index 1 then index 2.
    pub portfolios: [IndexPortfolio; 2],
}

impl PortfolioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise portfolio: {e}")))
    }

    pub fn from_set(set: &PortfolioSet) -> Self {
        Self {
            horizons: set.horizons.clone(),
            factor: set.params,
            names: set.portfolios.iter().flat_map(|p| p.names.iter().map(NameRecord::from)).collect(),
        }
    }

    pub fn into_set(self) -> Result<PortfolioSet> {
        self.factor.validate()?;
        if self.horizons.is_empty() || self.horizons.windows(2).any(|w| w[1] <= w[0]) || !(self.horizons[0] > 0.0) {
            return Err(Error::Config("horizons must be positive and strictly increasing".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &self.names {
            if !seen.insert(n.id.as_str()) {
                return Err(Error::Config(format!("duplicate name id `{}`", n.id)));
            }
            if n.default_probs.len() != self.horizons.len() {
                return Err(Error::InvalidName {
                    name: n.id.clone(),
                    reason: format!(
                        "{} default probabilities for {} horizons",
                        n.default_probs.len(),
                        self.horizons.len()
                    ),
                });
            }
        }
        let specs: Vec<NameSpec> = self.names.iter().map(NameSpec::from).collect();
        let portfolios = IndexPortfolio::split(&specs)?;
        for p in &portfolios {
            if p.names.is_empty() {
                return Err(Error::Config(format!("index {} has no names", p.index)));
            }
        }
        Ok(PortfolioSet {
            horizons: self.horizons,
            params: self.factor,
            portfolios,
        })
    }
}

pub fn load_portfolio(path: &Path) -> Result<PortfolioSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read portfolio file {}: {e}", path.display())))?;
    PortfolioFile::parse(&text)?.into_set()
}

/// Horizon position of time `t` in `horizons` (matched to 1e-9).
pub fn horizon_position(horizons: &[f64], t: f64) -> Result<usize> {
    horizons
        .iter()
        .position(|h| (h - t).abs() <= 1e-9)
        .ok_or_else(|| Error::Config(format!("horizon {t} is not one of the model horizons {horizons:?}")))
}
