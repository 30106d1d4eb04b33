use thiserror::Error;

/// Errors shared by every stage of the prediction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The operation needs more observations than the caller supplied.
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// A configuration value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The input is degenerate for the requested operation (constant series,
    /// zero total weight, empty window, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An autoregressive fit produced a non-causal filter.
    #[error("autoregressive fit is not causal")]
    NonCausal,

    /// No shrink level on the correction grid produced a positive definite
    /// covariance.
    #[error("covariance could not be corrected to positive definite")]
    NotPositiveDefinite,

    /// A text row could not be parsed as numeric data.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
