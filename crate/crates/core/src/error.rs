use thiserror::Error;

/// Errors shared across the library.
///
/// Variants are coarse on purpose: callers dispatch on kind, messages carry
/// the specifics (which node, which mode, the offending sizes).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tensor too large: {entries} entries exceeds the dense guard of {guard}")]
    TooLarge { entries: u128, guard: u64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficients are not in an orthonormal basis: {0}")]
    NotOrthonormal(String),

    #[error("range violation at node {node}: value {value} outside [{lo}, {hi}]")]
    RangeViolation {
        node: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("evaluation grid of {points} points exceeds the budget of {budget}")]
    GridBudget { points: u128, budget: u64 },

    #[error("numerical factorization failed: {0}")]
    Factorization(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
