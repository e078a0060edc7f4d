use thiserror::Error;

/// Errors raised by rule construction, point generation and the bound evaluators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("base mismatch: {0} vs {1}")]
    BaseMismatch(u32, u32),
    #[error("base {0} is not a prime")]
    NotPrime(u32),
    #[error("polynomial is not irreducible over Z_{0}")]
    NotIrreducible(u32),
    #[error("generating polynomial must be nonzero with degree < {0}")]
    InvalidGenerator(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("numeric envelope exceeded: {0}")]
    Envelope(String),
    #[error("oracle scale guard exceeded: {0}")]
    ScaleGuard(String),
    #[error("model invariant violated: {0}")]
    Model(String),
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
