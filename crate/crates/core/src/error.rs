use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Floating-point trouble that the caller should not silently absorb.
    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    /// A statistic was requested from a series that is too short.
    #[error("not enough data: {0}")]
    NotEnoughData(String),

    /// An iterative solver failed to converge or lost its bracket.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A serialized artifact (snapshot, checkpoint) is malformed or mismatched.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
