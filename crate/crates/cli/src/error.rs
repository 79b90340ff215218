use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("unknown method `{0}` (known: {known})", known = crate::presets::known_names())]
    UnknownMethod(String),

    #[error("method `{0}` appears more than once in the grid")]
    DuplicateMethod(String),

    #[error("t sweep needs at least one value")]
    EmptySweep,

    #[error("method `{0}` has no mis-classified vector re-weighting to sweep over")]
    NotMvMethod(String),

    #[error("{path}:{line}: {message}")]
    Input { path: PathBuf, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{context}: {source}")]
    Core { context: String, source: mvsoftmax::Error },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn core(context: impl Into<String>) -> impl FnOnce(mvsoftmax::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }

    /// 1 for configuration and I/O problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        use mvsoftmax::Error as E;
        match self {
            CliError::Core { source, .. } => match source {
                E::InvalidConfig(_) | E::InfeasibleSpec(_) | E::InsufficientNegatives { .. } => 1,
                _ => 2,
            },
            _ => 1,
        }
    }
}
