use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] geoinr::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Usage(String),

    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
