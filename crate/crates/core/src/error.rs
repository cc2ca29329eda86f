use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("ring length must be at least 1, got {0}")]
    InvalidLength(u32),
    #[error("ring with {p}^{k} elements exceeds the supported size")]
    RingTooLarge { p: u32, k: u32 },
    #[error("element is not a unit")]
    NonUnit,
    #[error("matrix is not invertible")]
    NonInvertible,
    #[error("lower-left block is not invertible")]
    BlockNotInvertible,
    #[error("matrix is not in M2-bullet (top-right unit, other entries in the maximal ideal)")]
    NotInM2Bullet,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("operands live over different rings")]
    RingMismatch,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("flag space has {needed} elements, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
