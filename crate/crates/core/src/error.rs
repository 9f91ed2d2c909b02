use thiserror::Error;

/// Errors raised by the alignment, walk and experiment routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid gap count: {0}")]
    InvalidGapCount(String),

    #[error("enumeration of {0} gap sets exceeds the budget of {1}")]
    EnumerationBudget(u128, u128),

    #[error("letter counts inconsistent with lengths: {0}")]
    InconsistentCounts(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("matrix is not positive definite (smallest eigenvalue {0})")]
    NotPositiveDefinite(f64),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("work estimate {0:.3e} exceeds the operation ceiling {1:.3e}")]
    Budget(f64, f64),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
