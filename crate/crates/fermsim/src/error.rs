use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FermError {
    #[error("mode index {index} out of range for {n} modes")]
    ModeOutOfRange { index: usize, n: usize },
    #[error("mode count {n} unsupported (allowed 1..={max})")]
    ModeCount { n: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("occupation string has length {got}, expected {expected}")]
    StringLength { expected: usize, got: usize },
    #[error("invalid occupation string: {0}")]
    InvalidOccupation(String),
    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("not a valid fermionic state: {0}")]
    InvalidState(String),
    #[error("operator mixes parity sectors (residual {0:e})")]
    ParityMixing(f64),
    #[error("invalid Kraus map: {0}")]
    InvalidKraus(String),
    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid Pauli string: {0}")]
    InvalidPauli(String),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error("negative input: {0}")]
    NegativeInput(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("linear system is underdetermined (rank {rank} < {needed})")]
    Underdetermined { rank: usize, needed: usize },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),
    #[error("non-local operation: {0}")]
    NonLocal(String),
    #[error("mixed input where a pure state is required (purity {0})")]
    MixedInput(f64),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, FermError>;

impl From<serde_json::Error> for FermError {
    fn from(e: serde_json::Error) -> Self {
        FermError::Json(e.to_string())
    }
}
