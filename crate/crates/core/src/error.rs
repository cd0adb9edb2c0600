use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integer overflow in exact field arithmetic")]
    Overflow,

    #[error("expected a rational Gaussian integer, found non-constant coefficients {0}")]
    NotRational(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("value {0} is outside the constellation")]
    OutOfConstellation(String),

    #[error("brute-force search space of {0} candidates exceeds the 2^24 guard")]
    SearchSpaceTooLarge(u128),

    #[error("not enough shares: need {needed}, have {available}")]
    InsufficientShares { needed: usize, available: usize },

    #[error("inconsistent share set: {0}")]
    InconsistentShares(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed share file: {0}")]
    MalformedShare(String),
}
