//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid construction, transforms, solvers, and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coordinate out of range at flat index {index}: {value}")]
    PointOutOfRange { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("generating tensor is not Hermitian: max deviation {0:.3e}")]
    NotHermitian(f64),

    #[error("dense oracle size cap exceeded: {0}")]
    SizeCapExceeded(String),

    #[error("unknown scenario: {0}")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
