//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("event type {type_id} out of range for {num_types} types")]
    TypeOutOfRange { type_id: usize, num_types: usize },

    #[error("invalid event sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("infeasible parameters: intensity vanishes at event {event} of sequence {sequence}")]
    InfeasibleParams { sequence: usize, event: usize },

    #[error("unstable parameters: branching spectral radius {radius} >= 1")]
    UnstableParams { radius: f64 },

    #[error("empty corpus: at least one event is required")]
    EmptyCorpus,

    #[error("shape mismatch for {what}: expected {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },

    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("invalid marginals: {0}")]
    InvalidMarginals(String),

    #[error("infeasible transport plan: marginal L1 error {error:e} exceeds {tolerance:e}")]
    InfeasiblePlan { error: f64, tolerance: f64 },

    #[error("Sinkhorn kernel underflow (an all-zero row or column); increase tau")]
    SinkhornUnderflow,

    #[error(
        "Sinkhorn stalled: marginal L1 error {error:e} after {iterations} iterations; increase tau"
    )]
    SinkhornStalled { error: f64, iterations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not a permutation matrix: {0}")]
    NotAPermutation(String),

    #[error("matrix {0} is identically zero")]
    ZeroMatrix(&'static str),
}

impl Error {
    /// Whether this is a numerical failure (as opposed to input validation).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SinkhornUnderflow | Error::SinkhornStalled { .. }
        )
    }
}
