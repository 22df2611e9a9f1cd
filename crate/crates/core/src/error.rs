use thiserror::Error;

/// Errors produced by channel construction, feasibility solving, optimization
/// and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {reason}")]
    InvalidDist { reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what} = {size} exceeds guard {limit}")]
    GuardExceeded {
        what: String,
        size: u128,
        limit: u128,
    },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("{what} did not converge after {iterations} iterations (gap {gap:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        gap: f64,
    },

    #[error("reduction stage {stage} failed verification: {detail}")]
    StageVerification { stage: usize, detail: String },

    #[error("internal consistency violation: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
