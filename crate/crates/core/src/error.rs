use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FrodoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FrodoError {
    #[error("invalid difference order {order} for a vector of length {len}")]
    InvalidOrder { order: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("covariate value {value} in group {group} lies outside the domain [{a}, {b}]")]
    OutOfDomain { group: usize, value: f64, a: f64, b: f64 },

    #[error("no covariate observations")]
    EmptyData,

    #[error("diagnostic undefined: {0}")]
    UndefinedDiagnostic(String),

    #[error("sampler failure: {0}")]
    SamplerFailure(String),

    #[error("initialization failed after {attempts} attempts: {reason}")]
    InitFailure { attempts: usize, reason: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("baseline `{kind}` is not compatible with scenario `{scenario}`")]
    IncompatibleBaseline { kind: String, scenario: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl FrodoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FrodoError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        FrodoError::Format { path: path.into(), message: message.into() }
    }

    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            FrodoError::Config(_)
            | FrodoError::InvalidOrder { .. }
            | FrodoError::Dimension(_)
            | FrodoError::UnknownScenario(_)
            | FrodoError::IncompatibleBaseline { .. } => 3,
            FrodoError::Data(_)
            | FrodoError::OutOfDomain { .. }
            | FrodoError::EmptyData
            | FrodoError::Io { .. }
            | FrodoError::Format { .. } => 4,
            FrodoError::UndefinedDiagnostic(_)
            | FrodoError::SamplerFailure(_)
            | FrodoError::InitFailure { .. } => 1,
        }
    }
}
