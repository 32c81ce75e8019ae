use thiserror::Error;

/// A malformed geometry file, located by line (0 for a missing header).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, field `{field}`: {message}")]
pub struct ParseError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] dtn_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
