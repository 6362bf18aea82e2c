use thiserror::Error;

use rmcf_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{failed} of {total} acceptance criteria failed")]
    Criteria { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 0 success, 1 failed criteria, 2 usage or configuration, 3 numerical
    /// escape or non-contraction, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 4,
            CliError::Criteria { .. } => 1,
            CliError::Core(e) => match e {
                CoreError::InvalidArgument(_)
                | CoreError::LayoutMismatch { .. }
                | CoreError::TooFewNodes { .. }
                | CoreError::NodeCountMismatch { .. }
                | CoreError::NotSingleLevel(_) => 2,
                CoreError::Io(_)
                | CoreError::Json(_)
                | CoreError::Format(_)
                | CoreError::NonUniformGrid(_)
                | CoreError::EmptyTrajectory => 4,
                _ => 3,
            },
        }
    }
}
