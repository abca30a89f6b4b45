use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Failure classes, one exit code each.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("ingest failed: {0}")]
    Ingest(#[source] panelcov::Error),

    #[error("analysis failed: {0}")]
    Analysis(#[source] panelcov::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: panelcov::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Ingest(_) => 3,
            CliError::Analysis(_) | CliError::Output { .. } => 4,
        }
    }

    /// Library errors raised while loading input. Configuration problems
    /// (missing directories, bad metadata) keep their own exit code.
    pub(crate) fn ingest(e: panelcov::Error) -> Self {
        match e {
            panelcov::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Ingest(other),
        }
    }

    pub(crate) fn analysis(e: panelcov::Error) -> Self {
        match e {
            panelcov::Error::Config(msg) | panelcov::Error::InvalidParameter(msg) => CliError::Config(msg),
            other => CliError::Analysis(other),
        }
    }

    pub(crate) fn output(path: impl Into<PathBuf>) -> impl FnOnce(panelcov::Error) -> Self {
        let path = path.into();
        move |source| CliError::Output { path, source }
    }
}
