use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}, column {col}: {msg}")]
    Parse {
        context: String,
        line: u64,
        col: u64,
        msg: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] countgauss_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn parse(context: impl Into<String>, line: u64, col: u64, msg: impl Into<String>) -> Self {
        CliError::Parse {
            context: context.into(),
            line,
            col,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for anything the caller got wrong (flags, files, preconditions),
    /// 1 for failures discovered while running.
    pub fn exit_code(&self) -> i32 {
        use countgauss_core::Error as E;
        match self {
            CliError::Core(E::NoConvergence { .. } | E::NotPositiveDefinite { .. } | E::EarlyExhaustion { .. }) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
