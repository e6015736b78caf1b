use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad or inconsistent configuration (lengths, ids, numeric keys).
    #[error("configuration error: {0}")]
    Config(String),

    /// A genome violated the problem's declared preconditions.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An evaluation produced unusable values.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Malformed input when reading an exported file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
