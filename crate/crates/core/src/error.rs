use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: missing required field `{field}`")]
    MissingField {
        path: PathBuf,
        line: usize,
        field: String,
    },

    #[error("aspect `{aspect}`: {message}")]
    Sampling { aspect: String, message: String },

    #[error("aspect pools overlap on word `{0}`")]
    OverlappingPools(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{0}")]
    Evaluation(String),

    #[error("vocabulary hash mismatch: checkpoint has {expected}, vocabulary has {actual}")]
    VocabularyMismatch { expected: String, actual: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
