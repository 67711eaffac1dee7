use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid surd: {0}")]
    InvalidSurd(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series is not centered: coefficient at frequency 0 is {0}")]
    NotCentered(String),

    #[error("precision exhausted at {bits} bits while {context}")]
    PrecisionExhausted { bits: u32, context: String },

    #[error("insufficient candidates: found {found}, need at least {needed}")]
    InsufficientCandidates { found: usize, needed: usize },

    #[error("shortfall: {0}")]
    Shortfall(String),

    #[error("certification failure: {0}")]
    CertificationFailure(String),

    #[error("sequence is not monotone decreasing at index {0}")]
    NotMonotone(usize),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("integer overflow in surd arithmetic")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, Error>;
