use thiserror::Error;

use crate::hilbert::LinOp;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A construction needs more basis vectors than the truncation provides.
    #[error("{what} needs truncation dimension at least {required}, got {available}")]
    Underprovisioned {
        what: String,
        required: usize,
        available: usize,
    },

    #[error("{what}: norm {norm} exceeds bound {bound} at round {round}")]
    BallViolation {
        what: &'static str,
        round: usize,
        norm: f64,
        bound: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("solver did not converge within {iterations} iterations (objective {objective})")]
    NonConvergence {
        iterations: usize,
        objective: f64,
        last: Box<LinOp>,
    },

    #[error("learner horizon of {horizon} rounds exceeded")]
    HorizonExceeded { horizon: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
