use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the explanation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unreadable WAV file: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("{path}: unsupported WAV {property}: {detail}")]
    UnsupportedWav {
        path: PathBuf,
        property: &'static str,
        detail: String,
    },

    #[error("invalid audio: {0}")]
    InvalidAudio(String),

    /// A violated precondition, naming the offending argument.
    #[error("invalid {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("separator: {0}")]
    Separator(String),

    #[error("predictor: {0}")]
    Predictor(String),

    #[error("predictor request {id}: {message}")]
    PredictorRequest { id: u64, message: String },

    #[error("scoring perturbation {mask_index}: {source}")]
    Perturbation {
        mask_index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("clip not attributable to a component mask: {0}")]
    Unattributable(String),

    #[error("singular normal equations (lambda = {lambda}): {detail}")]
    SingularSystem { lambda: f64, detail: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
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
