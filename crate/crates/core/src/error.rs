//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("missing checkpoint for cell {0}")]
    MissingCheckpoint(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
