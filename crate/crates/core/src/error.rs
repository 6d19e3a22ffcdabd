use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero lattice")]
    ZeroLattice,
    #[error("degenerate lattice: {0}")]
    DegenerateLattice(String),
    #[error("degenerate distribution; restrict to span")]
    DegenerateDistribution,
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("state cap exceeded: more than {cap} states")]
    StateCap { cap: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("experiment aborted: {0}")]
    Aborted(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
