use std::path::PathBuf;

/// Errors surfaced by the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] kmpp_core::Error),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema mismatch in {}: {reason}", path.display())]
    Schema { path: PathBuf, reason: String },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    /// Process exit code: 2 parameter, 3 invalid schedule, 4 budget, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        use kmpp_core::Error as E;
        match self {
            CliError::Core(E::Schedule(_)) => 3,
            CliError::Core(E::BudgetExceeded { .. }) => 4,
            CliError::Core(_) | CliError::Param(_) | CliError::Schema { .. } => 2,
            CliError::Json { source, .. } if source.is_io() => 5,
            CliError::Json { .. } => 2,
            CliError::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 5,
            CliError::Csv(_) => 2,
            CliError::Io { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

macro_rules! param {
    ($($arg:tt)*) => {
        $crate::error::CliError::Param(format!($($arg)*))
    };
}
pub(crate) use param;
