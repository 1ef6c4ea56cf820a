use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} is outside the supported range")]
    InvalidQubitCount(usize),

    #[error("qubit index {index} out of range for a {n}-qubit register")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("qubit index {0} used more than once in a placement")]
    DuplicateQubit(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("gates on {0} qubits are not supported")]
    UnsupportedArity(usize),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("configuration space has {count} members, above the cap of {cap}")]
    CapExceeded { count: String, cap: u64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
