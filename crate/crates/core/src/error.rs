use thiserror::Error;

use crate::model::ModelState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Pauli character {ch:?} in {string:?}")]
    InvalidPauli { ch: char, string: String },

    #[error("invalid hamiltonian: {0}")]
    Hamiltonian(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{n} qubits exceeds the enumeration cap of {cap}")]
    QubitCap { n: usize, cap: usize },

    #[error("term {term} is not measurable in basis {basis}")]
    NotCovered { term: String, basis: String },

    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),

    #[error("eigensolver did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("observed outcome {sigma} in basis {basis} has vanishing model amplitude")]
    ZeroProbability { basis: usize, sigma: String },

    #[error("dataset is empty")]
    EmptyData,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss {
        epoch: usize,
        last_good: Box<ModelState>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
