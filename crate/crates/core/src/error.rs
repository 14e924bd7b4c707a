use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or options supplied by the caller.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data that cannot be used (too short, empty, malformed).
    #[error("data error: {0}")]
    Data(String),

    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("vocabulary checksum mismatch: expected {expected}, found {found}")]
    ChecksumMismatch { expected: String, found: String },

    #[error("token id {id} is outside the vocabulary (size {size})")]
    UnknownToken { id: u32, size: usize },

    /// A non-finite value showed up in a parameter or activation.
    #[error("numeric failure in layer `{layer}`")]
    Numeric { layer: &'static str },

    #[error("predictor failed at test position {position}: {source}")]
    Predictor {
        position: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            what,
            line,
            message: message.into(),
        }
    }
}
