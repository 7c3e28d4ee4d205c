use thiserror::Error;

/// Errors surfaced by the lab. `Truncation` and `Resource` are recoverable
/// configuration problems (the CLI maps them to exit code 3).
#[derive(Debug, Error)]
pub enum RcmError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("site {0} out of box (n_sites = {1})")]
    SiteIndex(usize, usize),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RcmError>;
