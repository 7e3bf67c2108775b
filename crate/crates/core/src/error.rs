use thiserror::Error;

/// Errors raised by model construction, calibration and pricing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid factor parameters: {0}")]
    InvalidFactorParams(String),

    #[error("invalid loading for name `{name}`: idiosyncratic variance {idio_sq} is not positive")]
    InvalidLoading { name: String, idio_sq: f64 },

    #[error("invalid name `{name}`: {reason}")]
    InvalidName { name: String, reason: String },

    #[error("invalid factor grid size {0} (expected 1..=64)")]
    InvalidGridSize(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("loss lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("calibration did not converge after {iterations} iterations (final gradient norm {gradient_norm:.3e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },

    #[error("non-finite dual objective: {0}")]
    NonFinite(String),

    #[error("infinite divergence: P has mass where Q has none")]
    InfiniteDivergence,

    #[error("infeasible adjustment: target EL {target} outside attainable range ({min}, {max})")]
    InfeasibleAdjustment { target: f64, min: f64, max: f64 },

    #[error("undefined par spread: risky annuity is zero")]
    ZeroAnnuity,

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
