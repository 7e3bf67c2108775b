//! Run configuration file (TOML).
//!
//! Relative input paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use entropic_bespoke::basecorr::MappingRule;
use entropic_bespoke::dynamic::DEFAULT_PERSISTENCE;
use entropic_bespoke::pricing::ProxyAdjustment;
use entropic_bespoke::{FactorParams, IndexId, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    CalibrateStatic,
    CalibrateDynamic,
    PriceBespoke,
    MapBasecorr,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::CalibrateStatic => "calibrate-static",
            Mode::CalibrateDynamic => "calibrate-dynamic",
            Mode::PriceBespoke => "price-bespoke",
            Mode::MapBasecorr => "map-basecorr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub portfolio: PathBuf,
    pub constraints: Option<PathBuf>,
    pub discount: Option<PathBuf>,
    pub tranches: Option<PathBuf>,
    pub basecorr: Option<PathBuf>,
    /// Directory holding a posterior dump from an earlier static run.
    pub posterior: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Gauss-Hermite nodes per factor.
    pub nodes: [usize; 2],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nodes: [10, 10] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BespokeConfig {
    pub members: Vec<IndexId>,
    pub adjustment: Option<ProxyAdjustment>,
}

impl Default for BespokeConfig {
    fn default() -> Self {
        Self {
            members: IndexId::ALL.to_vec(),
            adjustment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MappingConfig {
    /// Index whose skew is mapped onto the bespoke.
    pub index: IndexId,
    pub rules: Vec<MappingRule>,
    /// Bespoke strikes for `map-basecorr`; taken from the tranche file when empty.
    pub strikes: Vec<f64>,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            index: IndexId::One,
            rules: MappingRule::ALL.to_vec(),
            strikes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicConfig {
    /// Per-year stay probability of the factor chain proposal.
    pub persistence: f64,
    pub coarsening: usize,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        Self {
            persistence: DEFAULT_PERSISTENCE,
            coarsening: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub inputs: Inputs,
    /// Overrides the factor block of the portfolio file.
    pub factor: Option<FactorParams>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub bespoke: BespokeConfig,
    #[serde(default)]
    pub mapping: MappingConfig,
    #[serde(default)]
    pub dynamic: DynamicConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(format!("run config: {e}")))?;
        if let Some(f) = &cfg.factor {
            f.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Resolves `path` against `base` unless it is absolute.
    pub fn resolve(base: &Path, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        }
    }
}

/// An input the mode needs, or a config error naming the missing key.
pub fn require<'a>(path: &'a Option<PathBuf>, key: &str, mode: Mode) -> Result<&'a PathBuf, CliError> {
    path.as_ref()
        .ok_or_else(|| CliError::config(format!("mode {} needs inputs.{key}", mode.as_str())))
}
