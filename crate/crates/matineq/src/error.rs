use std::path::PathBuf;

/// Position-tagged SDPA syntax or range error; lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("malformed report: {0}")]
    Report(#[from] serde_json::Error),
    #[error("unsupported report version {0}")]
    ReportVersion(u32),
    #[error("bad instance description: {0}")]
    Instance(String),
    #[error(transparent)]
    Solver(#[from] matineq_core::Error),
}
