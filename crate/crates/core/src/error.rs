use thiserror::Error;

/// Errors reported by operators, samplers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} rows, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("input block contains non-finite entries")]
    NonFinite,

    #[error("invalid matvec budget m = {m}: {reason}")]
    InvalidBudget { m: usize, reason: String },

    #[error("estimator requires a positive semidefinite operator (psd hint not set)")]
    NotPsd,

    #[error("operator is not symmetric")]
    NotSymmetric,

    #[error("degenerate sketch: {0}")]
    DegenerateSketch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("operator of dimension {dim} exceeds the densification limit of {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("MatrixMarket parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_budget(m: usize, reason: impl Into<String>) -> Error {
    Error::InvalidBudget {
        m,
        reason: reason.into(),
    }
}
