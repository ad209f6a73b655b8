use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ransteer_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("connection: {0}")]
    Connection(#[source] io::Error),

    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: serde_json::Error },

    #[error("malformed frame: {reason}")]
    Frame { reason: String, bytes: Vec<u8> },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("RIC endpoint failed: {0}")]
    Peer(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}
