//! Error type shared by every solver in the crate.

use thiserror::Error;

/// Failure modes of the numerical kernels.
///
/// Everything fallible in the crate returns this type so that callers can
/// thread residual evaluations, linear solves, and outer iterations together
/// without wrapping layers of bespoke errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    /// A computation produced NaN or infinity. The payload names the
    /// operation and, where useful, the offending index or step.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A linear solve hit a zero (or negligible) pivot.
    #[error("singular system in {0}")]
    Singular(String),

    /// An evaluation left the domain where the model is defined.
    #[error("evaluation outside valid domain: {0}")]
    Domain(String),

    /// An iteration exhausted its budget without meeting its tolerance.
    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: String, detail: String },

    /// Arguments violate a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl SolverError {
    pub fn no_convergence(what: impl Into<String>, detail: impl Into<String>) -> Self {
        SolverError::NoConvergence {
            what: what.into(),
            detail: detail.into(),
        }
    }
}
