use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: u128, cap: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("Weingarten matrix is singular for k = {k} > d = {d}")]
    SingularWeingarten { k: usize, d: usize },
    #[error("batch manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("insufficient shots: need N_M >= {needed}, got {got}")]
    InsufficientShots { needed: u64, got: u64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("line {line}: {msg}")]
    Validation { line: usize, msg: String },
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
