use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Numerical(String),

    #[error(transparent)]
    Core(#[from] sotlab_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    /// 1 for invalid input or configuration, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use sotlab_core::Error as E;
        match self {
            CliError::Numerical(_) => 2,
            CliError::Core(E::NotConverged { .. } | E::Diverged { .. } | E::NonFinite { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
