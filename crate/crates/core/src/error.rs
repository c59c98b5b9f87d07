use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must exceed 2 (got {0})")]
    InvalidAlpha(String),

    #[error("beta must exceed 1 (got {0})")]
    InvalidBeta(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {n} is out of range (table generated up to n = {n_max})")]
    RowOutOfRange { n: usize, n_max: usize },

    #[error("entry ({n}, {k}) lies outside the triangle 0 <= k <= n")]
    OutsideTriangle { n: usize, k: usize },

    #[error("operator is not nonexpansive: norm estimate {0}")]
    NotNonexpansive(f64),

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive value {value} at n = {n}; log-log fit undefined")]
    NonPositive { n: usize, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
