use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("reality violated at {0}")]
    NotReal(String),
    #[error("indeterminate point: denominator vanishes")]
    Indeterminate,
    #[error("singular linear system at weight {weight}: rank {rank} < {unknowns}")]
    SingularSystem { weight: u32, rank: usize, unknowns: usize },
    #[error("inconsistent linear system: residual {0:e}")]
    Inconsistent(f64),
    #[error("insufficient truncation: {0}")]
    InsufficientTruncation(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
