use std::path::PathBuf;

use boxball::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Library(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for bad input or parameters, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Library(e) => match e {
                Error::Parse(_) | Error::Domain(_) | Error::Capability(_) | Error::Window { .. } | Error::Range(_) => 2,
                _ => 1,
            },
            CliError::Json(_) => 1,
        }
    }
}
