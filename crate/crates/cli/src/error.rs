use std::path::PathBuf;

use opentm_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Io { .. } | CliError::Format { .. } => EXIT_FAILURE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Core errors raised while validating input.
    pub fn usage(err: CoreError) -> Self {
        CliError::Usage(err.to_string())
    }

    /// Core errors raised while running; numerical failures map to the solver
    /// exit code.
    pub fn runtime(err: CoreError) -> Self {
        match err {
            CoreError::Convergence { .. } | CoreError::SolverFailure(_) => CliError::Solver(err.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
