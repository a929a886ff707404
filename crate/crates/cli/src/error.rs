use std::path::{Path, PathBuf};

use thiserror::Error;

/// CLI failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed inputs (exit 2).
    #[error("{0}")]
    Input(String),
    /// The numerics failed on valid inputs (exit 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl From<s4tok_core::Error> for CliError {
    fn from(e: s4tok_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Prefixes a core error with the file it came from, unless the message
/// already names it.
pub fn at_path(path: &Path) -> impl FnOnce(s4tok_core::Error) -> CliError + '_ {
    move |e| {
        let shown = PathBuf::from(path).display().to_string();
        let numerical = e.is_numerical();
        let msg = e.to_string();
        let msg = if msg.contains(&shown) { msg } else { format!("{shown}: {msg}") };
        if numerical {
            CliError::Numerical(msg)
        } else {
            CliError::Input(msg)
        }
    }
}
