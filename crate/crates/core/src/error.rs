use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("{msg} at row {row}")]
    Row { row: usize, msg: String },

    #[error("dimension mismatch: expected p = {expected}, found p = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset has no observed events")]
    NoEvents,

    #[error("unknown endpoint '{name}'; valid endpoints: {valid}")]
    UnknownEndpoint { name: String, valid: String },

    #[error("no training set with an observed event after {attempts} split attempts")]
    SplitRetriesExhausted { attempts: usize },

    #[error("theta estimate undefined: {events} events against zero cumulative baseline hazard")]
    ZeroBaseline { events: f64 },

    #[error("no OOB trees for record {0}")]
    NoOobTrees(usize),

    #[error("undefined C-index: no permissible pairs")]
    UndefinedConcordance,

    #[error("model format version mismatch: file is version {found}, this build reads version {expected}")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),

    #[error("experiment failed: {0}")]
    Experiment(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn row(row: usize, msg: impl Into<String>) -> Self {
        Error::Row {
            row,
            msg: msg.into(),
        }
    }
}
