use thiserror::Error;

/// Errors produced while planning, solving, or executing a repair.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("cost matrix contains a directed cycle through node {0}")]
    Cyclic(usize),
    #[error("helper node {0} has no directed path to the new node")]
    Unreachable(usize),
    #[error("no helper can reach the new node")]
    NoRepairPath,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative cost on edge {0}")]
    NegativeCost(String),
    #[error("spec is not in the minimum-storage regime (alpha != M/k)")]
    NotMsr,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("search space of {size} points exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("value {0} exceeds the configured limit")]
    LimitExceeded(u128),
    #[error("matrix is singular")]
    Singular,
    #[error("{what}: retry budget of {budget} exhausted")]
    RetriesExhausted { what: &'static str, budget: usize },
    #[error("new node received {got} fragments but must store {need}")]
    InsufficientFragments { got: usize, need: usize },
    #[error("not enough helpers: {0}")]
    InsufficientHelpers(String),
    #[error("field size {q} is too small: {reason}")]
    FieldTooSmall { q: u64, reason: String },
    #[error("linear program is {0}")]
    LpStatus(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
