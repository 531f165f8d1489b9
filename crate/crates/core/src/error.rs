use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A CRNN weight file that does not match the expected architecture.
    #[error("weight format error in layer `{layer}`: {message}")]
    WeightFormat { layer: String, message: String },

    /// Adaptation produced a non-finite value; the engine refuses to continue.
    #[error("engine fault at sample {sample}: {message}")]
    Fault { sample: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn weights(layer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::WeightFormat {
            layer: layer.into(),
            message: message.into(),
        }
    }

    /// Short stable tag used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::WeightFormat { .. } => "weight-format",
            Error::Fault { .. } => "engine-fault",
            Error::Config(_) => "config",
            Error::MissingFile(_) => "missing-file",
            Error::Wav(_) => "wav",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
