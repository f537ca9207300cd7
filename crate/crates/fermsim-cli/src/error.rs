use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: does not match the {schema} schema:\n{errors}")]
    Schema { path: PathBuf, schema: &'static str, errors: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
    #[error(transparent)]
    Fermsim(#[from] fermsim::FermError),
}

impl CliError {
    /// Process exit code: every error is a usage or input problem.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
