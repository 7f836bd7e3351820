use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input violated a named invariant (trace, Hermiticity, PSD, ...).
    #[error("{invariant} check failed: {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The derivative has support on the kernel of the state, so no SLD exists.
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("rank-deficient state: {0}")]
    RankDeficient(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn validation(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            invariant,
            detail: detail.into(),
        }
    }

    /// Name of the violated invariant, if this is a validation error.
    pub fn invariant(&self) -> Option<&'static str> {
        match self {
            Error::Validation { invariant, .. } => Some(invariant),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
