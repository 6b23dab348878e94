use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Scenario { path: PathBuf, msg: String },

    #[error("{}: {source}", context)]
    Core {
        context: String,
        #[source]
        source: hevopt::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn core(context: impl Into<String>, source: hevopt::Error) -> Self {
        Self::Core {
            context: context.into(),
            source,
        }
    }

    /// 2 validation, 3 infeasibility, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 4,
            Self::Scenario { .. } => 2,
            Self::Core { source, .. } => match source {
                hevopt::Error::Infeasible(_) => 3,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for hevopt::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::core(what(), e))
    }
}
