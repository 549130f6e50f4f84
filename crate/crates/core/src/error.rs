use thiserror::Error;

/// Errors raised by the splitting library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("metric is not strongly positive: {0}")]
    NotPositiveDefinite(String),

    #[error("divergence at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    #[error("resolvent evaluation failed: {0}")]
    Resolvent(String),

    #[error("certificate violated: {inequality} (worst margin {worst_margin:.3e} at k = {iteration})")]
    Certificate {
        inequality: String,
        worst_margin: f64,
        iteration: usize,
    },

    #[error("no zero found in [{lo}, {hi}]")]
    NoZeroFound { lo: f64, hi: f64 },

    #[error("problem document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, Error>;
