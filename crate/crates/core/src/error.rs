use thiserror::Error;

/// Errors raised by the solvers, the data layer, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sparsity level {s} out of range 1..={d}")]
    SparsityOutOfRange { s: usize, d: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("support indices must be strictly increasing")]
    UnsortedSupport,

    #[error("coordinate {0} was not observed")]
    MissingCoordinate(usize),

    /// An algorithm asked for more distinct attributes of one example than the
    /// budget allows. This is always a bug in the caller.
    #[error("attribute budget exceeded on example {example}: {requested} distinct attributes > {limit}")]
    BudgetExceeded {
        example: u64,
        requested: usize,
        limit: usize,
    },

    #[error("invalid budget: {0}")]
    InvalidBudget(String),

    #[error("invalid block width {width} for dimension {dim}")]
    InvalidBlockWidth { width: usize, dim: usize },

    #[error("batch size must be at least 1")]
    InvalidBatchSize,

    #[error("support of size {size} exceeds the attribute budget {limit}")]
    SupportTooLarge { size: usize, limit: usize },

    #[error("feature bound R_inf is unbounded; pass an effective bound to use theory batch sizes")]
    UnboundedFeatures,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vector has no nonzero entries")]
    ZeroVector,

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed aggregate file {path}: {reason}")]
    MalformedAggregate { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
