use thiserror::Error;

/// Errors surfaced by validation and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented domain restriction.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Mismatched vector/matrix dimensions between related inputs.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix failed a structural requirement (Hermitian, PSD, ...).
    #[error("matrix is not {property}: {detail}")]
    MatrixStructure { property: &'static str, detail: String },

    /// An iterative routine exhausted its iteration budget.
    #[error("{routine} failed to converge within {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    /// The requested quantity diverges for the given inputs.
    #[error("quantity is unbounded: {0}")]
    Unbounded(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }

    pub(crate) fn dim(detail: impl Into<String>) -> Self {
        Error::Dimension(detail.into())
    }
}
