use alloc::string::String;

use crate::model::ModelTag;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    Parameter(String),
    #[error("need at least 2 particles, got {0}")]
    TooFewParticles(usize),
    #[error("configuration is not sorted at index {0}")]
    Unsorted(usize),
    #[error("expected a {expected} configuration, got {found}")]
    ModelMismatch { expected: ModelTag, found: ModelTag },
    #[error("index out of range: {0}")]
    Bounds(String),
    #[error("window radius {radius} exceeds {limit} available on one side of particle {j}")]
    Window { j: usize, radius: usize, limit: usize },
    #[error("internal consistency violated: {0}")]
    Consistency(String),
    #[error("outside the domain of the estimator: {0}")]
    Domain(String),
    #[error("degenerate fit: {0}")]
    Fit(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
