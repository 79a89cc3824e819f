//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {n} exceeds the configured maximum {max}")]
    Capacity { n: usize, max: usize },
    #[error("expected {expected} values for dimension {n}, got {got}")]
    Length {
        n: usize,
        expected: usize,
        got: usize,
    },
    #[error("value at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{0}")]
    Domain(String),
    #[error("operator has no sphere-weight representation")]
    MissingWeights,
    #[error("operator has no spectral profile")]
    MissingProfile,
    #[error("operator family is empty")]
    EmptyFamily,
    #[error("function must be nonnegative (index {index} is {value}); split into positive and negative parts or apply to |f|")]
    Negative { index: usize, value: f64 },
    #[error("marking kind mismatch: expected {expected}, got {got}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("root isolation did not converge for n={n}, k={k}")]
    RootIsolation { n: usize, k: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
