use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dlm_core::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Config(String),
    #[error("{0} bound checks violated")]
    BoundsViolated(usize),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            // unreadable inputs are reported like malformed ones
            CliError::Read { .. } => "ParseError",
            CliError::Write { .. } => "IoError",
            CliError::Config(_) => "InvalidConfig",
            CliError::BoundsViolated(_) => "BoundViolation",
        }
    }
}

/// Lifts any module error into [`CliError::Core`].
pub fn core<E: Into<dlm_core::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}
