//! CLI-level errors and their process exit codes.
//!
//! Exit codes: 0 success, 2 file parse error (clap uses 2 for usage errors
//! too), 3 validation error, 4 programming non-convergence, 5 out-of-domain
//! query, 6 I/O failure.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}{}: {msg}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Validation {
        path: String,
        line: Option<usize>,
        msg: String,
    },

    #[error(transparent)]
    Sim(#[from] memcross::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Validation { .. } => 3,
            CliError::Sim(e) => match e {
                memcross::Error::OutOfDomain { .. } => 5,
                memcross::Error::CellNonConvergence { .. }
                | memcross::Error::MatrixNonConvergence { .. } => 4,
                _ => 3,
            },
            CliError::Io { .. } => 6,
        }
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
