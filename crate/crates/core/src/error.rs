use thiserror::Error;

/// Failure classes shared by every module.
///
/// The variants mirror how callers are expected to react: `Input` means the
/// data itself is malformed, `Precondition` means the data is fine but the
/// request cannot be answered at that size, `Structural` means the system
/// (matrix, chain, partition) lacks a property the operation relies on.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("orientation error: {0}")]
    Orientation(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
