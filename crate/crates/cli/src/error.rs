use std::path::PathBuf;

use thiserror::Error;

use byzreg::histories::JsonlError;
use byzreg::runtime::{ConfigError, RuntimeError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {1}", .0.display())]
    Io(PathBuf, std::io::Error),
    #[error("scenario does not parse: {0}")]
    Parse(serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("trace: {0}")]
    Trace(#[from] JsonlError),
}
