use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A point or parameter lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller-supplied arguments violate a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("assembly failed on triangle {triangle}: {message}")]
    Assembly { triangle: usize, message: String },

    /// The constrained form is not positive definite on the requested subdomain.
    #[error("stability violation: {0}")]
    StabilityViolation(String),

    #[error("factorization breakdown at pivot {pivot}: {message}")]
    Breakdown { pivot: usize, message: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("problem too large: {0}")]
    Size(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerics.
    pub fn is_argument_error(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Domain(_) | Error::Unsupported(_) | Error::Parse { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
