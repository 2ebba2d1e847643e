use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the flow, pooling and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Arguments violate a precondition (dimensions, lengths, ranges).
    #[error("invalid input: {0}")]
    Input(String),
    /// A file was readable but its contents do not match the expected layout.
    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
