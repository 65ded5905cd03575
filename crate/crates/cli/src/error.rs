use std::path::PathBuf;

use itrd_core::ItrdError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const TRAINING: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] ItrdError),

    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                ItrdError::DegenerateKernel(_) | ItrdError::Numerical(_) => exit::DEGENERATE,
                ItrdError::Training { .. } => exit::TRAINING,
                ItrdError::Dimension(_) | ItrdError::Domain(_) | ItrdError::Argument(_) => {
                    exit::INPUT
                }
            },
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => exit::INPUT,
            CliError::Json(_) => exit::INPUT,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
