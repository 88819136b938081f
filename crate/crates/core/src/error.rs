use std::path::PathBuf;

/// Errors produced anywhere in the scoring pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("referential integrity: unknown {what} \"{id}\"")]
    ReferentialIntegrity { what: &'static str, id: String },

    #[error("duplicate {0}")]
    Duplicate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("cannot replace token \"{0}\": vocabulary has no alternative")]
    CannotReplace(String),

    #[error("encoder unavailable: {identity}: {reason}")]
    EncoderUnavailable { identity: String, reason: String },

    #[error("missing embedding for key \"{0}\"")]
    MissingEmbedding(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("label/loss mismatch: {0}")]
    LabelLossMismatch(String),

    #[error("incompatible model file: {0}")]
    IncompatibleModel(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("undefined score: {0}")]
    UndefinedScore(String),
}

/// Coarse grouping used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Runtime,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::LabelLossMismatch(_) => ErrorClass::Config,
            Error::Parse { .. }
            | Error::ReferentialIntegrity { .. }
            | Error::Duplicate(_)
            | Error::InsufficientData(_)
            | Error::DegenerateInput(_)
            | Error::CannotReplace(_)
            | Error::MissingEmbedding(_)
            | Error::Format(_)
            | Error::IncompatibleModel(_)
            | Error::Dimension(_) => ErrorClass::Data,
            Error::Io { .. }
            | Error::EncoderUnavailable { .. }
            | Error::UndefinedCorrelation(_)
            | Error::UndefinedScore(_) => ErrorClass::Runtime,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
