use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported wav encoding: audio format {format}, {bits} bits per sample")]
    NotPcm { format: u16, bits: u16 },

    #[error("malformed wav: {0}")]
    MalformedWav(String),

    #[error("wav data chunk is empty")]
    EmptyData,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training diverged: loss is NaN at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("csv error in {}: {message}", path.display())]
    Csv { path: PathBuf, message: String },

    #[error("all {0} input files failed")]
    AllFailed(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
