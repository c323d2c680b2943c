use thiserror::Error;

use crate::repair::RepairReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("modulus {0} is outside the supported range")]
    ModulusOutOfRange(u64),

    #[error("residues belong to different moduli ({0} and {1})")]
    ModulusMismatch(u64, u64),

    #[error("0 is not allowed in the set")]
    ZeroElement,

    #[error("element {0} appears more than once")]
    DuplicateElement(u64),

    #[error("position {position} is out of range 1..={len}")]
    OutOfRange { position: usize, len: usize },

    #[error("no acceptable swap partner for bad endpoint {0}")]
    NoCandidate(usize),

    #[error("repair failed after {} attempts", .0.attempts.len())]
    Failed(Box<RepairReport>),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("invalid size: {0}")]
    BadSize(String),

    #[error("invalid size sequence: {0}")]
    BadSizes(String),

    #[error("epsilon {0} must lie in (0, 1) with m <= (1 - epsilon) n")]
    EpsRange(f64),

    #[error("max point probability {0} is below the 1/p floor")]
    BelowFloor(f64),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
