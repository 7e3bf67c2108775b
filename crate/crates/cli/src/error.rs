//! Single-line, machine-parsable run errors.

use entropic_bespoke::Error;

/// Rendered as `error code=E_*: message` on one line.
#[derive(Debug, thiserror::Error)]
#[error("error code={code}: {message}")]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        let message: String = message.into();
        Self {
            code,
            message: message.split_whitespace().collect::<Vec<_>>().join(" "),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("E_USAGE", message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("E_CONFIG", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new("E_IO", message)
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        if self.code == "E_USAGE" {
            2
        } else {
            1
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::Toml(_) | Error::Csv(_) => "E_CONFIG",
            Error::Io(_) => "E_IO",
            Error::InvalidFactorParams(_)
            | Error::InvalidLoading { .. }
            | Error::InvalidName { .. }
            | Error::InvalidGridSize(_)
            | Error::InvalidConstraint(_)
            | Error::InvalidInput(_)
            | Error::LatticeMismatch(_)
            | Error::LengthMismatch { .. } => "E_INPUT",
            Error::NotConverged { .. } | Error::NonFinite(_) | Error::InfiniteDivergence => "E_CALIBRATION",
            Error::InfeasibleAdjustment { .. } => "E_INFEASIBLE",
            Error::ZeroAnnuity => "E_PRICING",
            Error::NoSolution(_) => "E_NO_SOLUTION",
        };
        Self::new(code, e.to_string())
    }
}
