use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unparseable url: {0}")]
    UnparseableUrl(String),

    #[error("stream of {len} messages is shorter than the minimum of {min}")]
    StreamTooShort { len: usize, min: usize },

    #[error("stream contains a message for account {found}, expected {expected}")]
    MixedAccounts { expected: String, found: String },

    #[error("no profile for account {0}")]
    NotFound(String),

    #[error("corrupt profile at {path}: {reason}")]
    CorruptProfile { path: PathBuf, reason: String },

    #[error("no profile available for account {0}")]
    ProfileMissing(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid simulation spec: {0}")]
    SimulationSpec(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
