//! Error type shared across the crate.

use thiserror::Error;

/// Coarse classification of an error, used by callers (notably the CLI) to
/// pick an exit code: usage errors, data/format errors, numeric failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty process set")]
    EmptySet,

    #[error("index {index} out of range for {n} processes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate index {0} in selection")]
    DuplicateIndex(usize),

    #[error("invalid process set: {0}")]
    InvalidProcessSet(String),

    #[error("empty pattern")]
    EmptyPattern,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing column '{0}' in header")]
    MissingColumn(String),

    #[error("row {row}: {msg}")]
    CsvRow { row: usize, msg: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("separator {sep:?} occurs in action label {label:?}")]
    SeparatorCollision { sep: char, label: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("terminal action unreachable from start in transition matrix")]
    UnreachableTerminal,

    #[error("timestamps required but absent")]
    TimesAbsent,

    #[error("process {0} has zero total time")]
    ZeroTotalTime(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("model archive: {0}")]
    Archive(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::EmptySet
            | Error::IndexOutOfRange { .. }
            | Error::DuplicateIndex(_)
            | Error::EmptyPattern
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch(_) => ErrorClass::Usage,
            Error::InvalidProcessSet(_)
            | Error::MissingColumn(_)
            | Error::CsvRow { .. }
            | Error::InvalidData(_)
            | Error::SeparatorCollision { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::UnreachableTerminal
            | Error::TimesAbsent
            | Error::ZeroTotalTime(_)
            | Error::Archive(_) => ErrorClass::Data,
            Error::NonFinite(_) | Error::Diverged { .. } => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
