//! CLI error type carrying the process exit code: config problems exit 1,
//! solver stalls exit 2, failed checks or criteria exit 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config file, bad command-line arguments, or an impossible request.
    #[error("{0}")]
    Config(String),

    /// The transport optimizer missed its tolerance mid-run, or the solver
    /// aborted before the horizon; artifacts up to that point are on disk.
    #[error("{0}")]
    Stall(String),

    /// The run finished but an enforced check (or validation criterion) failed.
    #[error("{0}")]
    ChecksFailed(String),

    /// Filesystem trouble while writing artifacts.
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Stall(_) => 2,
            CliError::ChecksFailed(_) => 3,
            // Treat artifact-write failures as config-class: the run itself
            // did not fail, the destination did.
            CliError::Io { .. } => 1,
        }
    }
}

impl From<aggdiff::Error> for CliError {
    fn from(e: aggdiff::Error) -> Self {
        match e {
            aggdiff::Error::Stalled { .. } => CliError::Stall(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
