use thiserror::Error;

/// Errors raised by the routing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("index mismatch: {what} has {found} entries, expected {expected}")]
    IndexMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} is undefined at gamma = {gamma}")]
    Domain { what: &'static str, gamma: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last iterate {last})")]
    Convergence { iterations: usize, last: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit domain error: {0}")]
    FitDomain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects values outside the closed unit interval, including NaN.
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid(name, format!("{value} is not in [0, 1]")))
    }
}
