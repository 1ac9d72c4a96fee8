use thiserror::Error;

/// Every failure a command can report, grouped by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 config, 3 training, 4 evaluation, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Training(_) => 3,
            CliError::Eval(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}
