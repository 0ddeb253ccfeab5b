use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what} exceeds cap {cap} (needed {needed})")]
    CapExceeded {
        what: &'static str,
        cap: u64,
        needed: u64,
    },

    #[error("coset enumeration exceeded {limit} cosets (high-water mark {high_water})")]
    CosetLimit { limit: usize, high_water: usize },

    #[error("element is not a member of the group: {0}")]
    NotMember(String),

    #[error("arity mismatch: presentation has {expected} generators, got {got} images")]
    Arity { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invariant breach: {0}")]
    InvariantBreach(String),
}

pub type Result<T> = std::result::Result<T, Error>;
