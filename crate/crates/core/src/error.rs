use thiserror::Error;

use crate::filter::TemperingTrace;

/// Failures raised by a forward model step.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-finite value in propagated state at index {index}")]
    NonFinite { index: usize },
    #[error("layer thickness lost positivity: h = {value} at cell ({i}, {j})")]
    Positivity { i: usize, j: usize, value: f64 },
    #[error("state has length {got}, model expects {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("noise increment has length {got}, model expects {expected}")]
    NoiseLength { expected: usize, got: usize },
    #[error("Coriolis parameter vanishes at y = {y}")]
    SingularBalance { y: f64 },
}

/// Errors from the particle filter.
#[derive(Debug, Error)]
pub enum FilterError {
    #[error("likelihood is zero for every particle")]
    DegenerateLikelihood,
    #[error("tempering did not reach phi = 1 within {max_iters} stages (phi = {phi})")]
    TemperingExhausted {
        max_iters: usize,
        phi: f64,
        trace: Box<TemperingTrace>,
    },
    #[error("temperature bisection did not converge after {iters} iterations")]
    BisectionFailed { iters: usize },
    #[error("invalid filter input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl FilterError {
    /// Trace recorded up to the failure, when one exists.
    pub fn trace(&self) -> Option<&TemperingTrace> {
        match self {
            FilterError::TemperingExhausted { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

/// Configuration validation failures.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}
