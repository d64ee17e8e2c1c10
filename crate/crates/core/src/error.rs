use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("generator index {index} exceeds ambient rank {rank}")]
    GeneratorOutOfRange { index: usize, rank: usize },

    #[error("exponent out of range at byte {pos}")]
    ExponentOverflow { pos: usize },

    #[error("arity mismatch: expected {expected} images, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("rank mismatch: {0}")]
    RankMismatch(String),

    #[error("the identity word has no root")]
    IdentityInput,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("budget exceeded: {what} needs {needed}, limit {limit}")]
    BudgetExceeded { what: String, needed: u128, limit: u128 },

    #[error("hypothesis violated: {name}: {detail}")]
    Hypothesis { name: &'static str, detail: String },

    #[error("invalid group table: {0}")]
    InvalidTable(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal invariant failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn budget(what: impl Into<String>, needed: u128, limit: u128) -> Self {
        Error::BudgetExceeded { what: what.into(), needed, limit }
    }
}
