use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// Malformed file; `field` names the offending entry.
    #[error("{path}: cannot parse `{field}`: {reason}")]
    Parse { path: PathBuf, field: String, reason: String },
    /// Well-formed data that breaks an invariant.
    #[error("{path}: {source}")]
    Validation { path: PathBuf, source: blurev_core::Error },
    #[error("{path}: {what} mismatch (expected {expected}, found {found})")]
    VersionMismatch { path: PathBuf, what: &'static str, expected: String, found: String },
    #[error("dataset has no ground-truth {0}")]
    MissingGroundTruth(&'static str),
    #[error("config: {0}")]
    Config(String),
    /// Input that is valid but useless, e.g. an empty event stream.
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Core(#[from] blurev_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, field: impl Into<String>, reason: impl ToString) -> Error {
        Error::Parse { path: path.into(), field: field.into(), reason: reason.to_string() }
    }
}
