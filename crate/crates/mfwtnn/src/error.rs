//! Error type shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// A spectrum that should have been conjugate-symmetric was not: the
    /// inverse transform left an imaginary residue above tolerance.
    #[error("conjugate symmetry violated: {0}")]
    Symmetry(String),

    #[error("numeric check failed: {0}")]
    Numeric(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {reason}", path = .path.display())]
    Format { path: PathBuf, reason: String },

    #[error("refusing to overwrite {}; pass force to replace it", .0.display())]
    AlreadyExists(PathBuf),

    #[error("{path}: {source}", path = .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    /// Attaches a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
