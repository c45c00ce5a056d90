use std::path::PathBuf;

use infoflow::ErrorCategory;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] infoflow::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse { path: path.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        let category = match self {
            CliError::Config(_) => ErrorCategory::Config,
            CliError::Io { .. } => ErrorCategory::Io,
            CliError::Parse { .. } => ErrorCategory::Format,
            CliError::Core(e) => e.category(),
        };
        match category {
            ErrorCategory::Config => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Format => 4,
            ErrorCategory::Numeric => 5,
        }
    }
}
