//! Error types shared across the crate.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("infeasible set: {0}")]
    InfeasibleSet(String),

    #[error("point is not a member of the set")]
    NotAMember,

    #[error("family index {index} out of range 1..={max}")]
    IndexOutOfRange { index: i64, max: i64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("subdifferential flavor {flavor} unavailable in closed form for this atom")]
    UnsupportedFlavor { flavor: String },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("instance error: {0}")]
    Instance(String),
}

pub type Result<T> = std::result::Result<T, ConeError>;
