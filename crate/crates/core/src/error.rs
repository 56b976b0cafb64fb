use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (leading minor {minor})")]
    NotPositiveDefinite { minor: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint does not match inputs: expected fingerprint {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical kind (factorizations, non-finite
    /// densities), as opposed to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. } | Error::Numerical(_))
    }

    /// True for malformed input data or configuration.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Config(_)
                | Error::Dimension(_)
                | Error::InvalidArgument(_)
                | Error::FingerprintMismatch { .. }
        )
    }
}
