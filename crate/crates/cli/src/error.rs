use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] schatten_core::Error),

    /// A core error attributed to a config field.
    #[error("{field}: {source}")]
    Field {
        field: &'static str,
        #[source]
        source: schatten_core::Error,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A verification suite ran but some criterion failed.
    #[error("{0} verification criteria failed")]
    Verification(usize),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn field(field: &'static str) -> impl FnOnce(schatten_core::Error) -> CliError {
        move |source| CliError::Field { field, source }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for parse errors, 3 for dimension or feasibility errors, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) | CliError::Field { source: e, .. } => match e {
                schatten_core::Error::Parse { .. } => 2,
                schatten_core::Error::Io(_) => 4,
                _ => 3,
            },
            CliError::Io { .. } => 4,
            CliError::Verification(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
