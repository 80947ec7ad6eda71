use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("signal too short: {samples} samples, need at least one frame of {frame_len}")]
    SignalTooShort { samples: usize, frame_len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("client {client} produced a zero-norm weight update")]
    ZeroNormUpdate { client: usize },

    #[error("constellation constraint unsatisfied after {attempts} attempts: {constraint}")]
    ConstraintUnsatisfiable { attempts: usize, constraint: String },

    #[error("unknown source class `{0}`")]
    UnknownClass(String),

    #[error("membership undefined: {0}")]
    MembershipUndefined(String),

    #[error("CTS undefined: {0}")]
    CtsUndefined(String),

    #[error("{0}")]
    Evaluation(String),

    #[error("unsupported checkpoint version {0}")]
    CheckpointVersion(u32),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
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
