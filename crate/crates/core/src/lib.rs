//! Groundstate reconstruction of qubit Hamiltonians from projective
//! measurement data.
//!
//! The crate covers the full pipeline: Pauli Hamiltonians and their
//! measurement bases ([`pauli`]), a dense statevector engine ([`statevec`]),
//! Born-rule dataset generation ([`sampler`]), two neural wavefunctions
//! ([`rbm`], [`rnn`]) trained on a multi-basis cross entropy ([`train`]),
//! fixed-point maximum-likelihood tomography ([`mle`]), uniform classical
//! shadows ([`shadows`]), error metrics and power-law fits ([`analysis`]),
//! and sweeps over shot budgets ([`harness`]).
//!
//! Bit convention used everywhere: qubit 0 is the leftmost character of a
//! Pauli or outcome string and the most significant bit of a basis index.

pub mod analysis;
pub mod bits;
pub mod error;
pub mod harness;
pub mod mle;
pub mod model;
pub mod pauli;
pub mod rbm;
pub mod rng;
pub mod rnn;
pub mod sampler;
pub mod shadows;
pub mod statevec;
pub mod train;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Largest system that any routine enumerating all 2^N amplitudes accepts.
pub const MAX_ENUMERATED_QUBITS: usize = 14;
