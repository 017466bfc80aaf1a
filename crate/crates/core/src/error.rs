//! Shared error type. Variants carry a short category used by the CLI for
//! machine-parsable failure lines.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ingest: {0}")]
    Ingest(String),

    #[error("config: {0}")]
    Config(String),

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("sim: {0}")]
    Sim(String),

    #[error("report: {0}")]
    Report(String),
}

impl Error {
    /// One-word failure category for the CLI error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Ingest(_) => "ingest",
            Error::Config(_) => "config",
            Error::Oracle(_) => "oracle",
            Error::Sim(_) => "sim",
            Error::Report(_) => "report",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
