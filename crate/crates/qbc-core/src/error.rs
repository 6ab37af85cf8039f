use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("density operator has eigenvalue {0:.3e} below the clamp threshold")]
    NotPositive(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense cap exceeded: {qubits} qubits requested, cap is {cap}")]
    CapExceeded { qubits: usize, cap: usize },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("oracle check failed: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimMismatch(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
