use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates a type invariant (negative width, zero load, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The operation is not defined at this point of parameter space.
    #[error("domain error: {0}")]
    Domain(String),

    /// No candidate root of the deep-network root condition passed the
    /// positivity filters.
    #[error("no physically admissible root (candidates: {candidates:?})")]
    NoPhysicalRoot { candidates: Vec<f64> },

    /// A linear system required by a posterior expectation is numerically
    /// singular.
    #[error("ill-conditioned system: condition estimate {condition:e} exceeds {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },

    /// Matrix sizes sit exactly on an invertibility regime boundary.
    #[error("sizes sit on a regime boundary: {0}")]
    RegimeAmbiguous(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoPhysicalRoot { .. } | Error::IllConditioned { .. }
        )
    }
}
