use thiserror::Error;

/// Errors raised anywhere in the suite.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported lattice size L={0} (need L >= {1})")]
    UnsupportedSize(usize, usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("invalid fault location: {0}")]
    InvalidFault(String),

    #[error("odd number of defects ({0}) without a boundary")]
    OddDefects(usize),

    #[error("decoding graph is disconnected: {0}")]
    Disconnected(String),

    #[error("simulation inconsistency: {0}")]
    Inconsistent(String),

    #[error("threshold fit failed: {0}")]
    Fit(String),

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
