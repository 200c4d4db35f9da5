use std::path::PathBuf;

/// Failure of a harness operation, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] plurirank_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("property violation: {0}")]
    Violation(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Input(_) | Self::Core(_) | Self::Io { .. } => 2,
            Self::Violation(_) => 3,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
