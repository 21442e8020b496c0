//! Uniform handle over the wavefunction families and their checkpoints.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rbm::{RbmCheckpoint, RbmParams};
use crate::rnn::{RnnCheckpoint, RnnParams};
use crate::statevec::StateVector;

/// A differentiable wavefunction with a flat real parameter vector.
pub trait Ansatz: Clone + Send + Sync {
    fn n_qubits(&self) -> usize;

    fn num_params(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, flat: &[f64]);

    /// The normalized state over all 2^N configurations.
    fn amplitudes(&self) -> Result<StateVector>;

    /// Vector-Jacobian product Σ_τ Re(adjoint(τ) · ∂log ψ(τ)/∂λ_r) for every
    /// real parameter λ_r, where ψ is the unnormalized amplitude.
    fn pullback(&self, adjoint: &[Complex64]) -> Vec<f64>;

    fn to_model_state(&self) -> ModelState;
}

/// Any state that can be evaluated on all configurations.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelState {
    Rbm(RbmParams),
    Rnn(RnnParams),
    /// Explicit 2^N amplitude vector.
    Wavefunction(StateVector),
}

impl ModelState {
    pub fn n_qubits(&self) -> usize {
        match self {
            ModelState::Rbm(p) => p.n_visible,
            ModelState::Rnn(p) => p.n_qubits,
            ModelState::Wavefunction(s) => s.n_qubits(),
        }
    }

    pub fn to_statevector(&self) -> Result<StateVector> {
        match self {
            ModelState::Rbm(p) => p.to_statevector(),
            ModelState::Rnn(p) => p.to_statevector(),
            ModelState::Wavefunction(s) => Ok(s.clone()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelState::Rbm(_) => "rbm",
            ModelState::Rnn(_) => "rnn",
            ModelState::Wavefunction(_) => "wavefunction",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let c = match self {
            ModelState::Rbm(p) => Checkpoint::Rbm(p.into()),
            ModelState::Rnn(p) => Checkpoint::Rnn(p.into()),
            ModelState::Wavefunction(s) => Checkpoint::Wavefunction(WavefunctionCheckpoint {
                n: s.n_qubits(),
                re: s.amplitudes().iter().map(|a| a.re).collect(),
                im: s.amplitudes().iter().map(|a| a.im).collect(),
            }),
        };
        Ok(serde_json::to_string_pretty(&c)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<Checkpoint>(text)? {
            Checkpoint::Rbm(c) => Ok(ModelState::Rbm(c.try_into()?)),
            Checkpoint::Rnn(c) => Ok(ModelState::Rnn(c.try_into()?)),
            Checkpoint::Wavefunction(c) => {
                if c.re.len() != 1 << c.n || c.im.len() != 1 << c.n {
                    return Err(Error::Format("wavefunction length differs from 2^n".into()));
                }
                let amps =
                    c.re.iter()
                        .zip(&c.im)
                        .map(|(&a, &b)| Complex64::new(a, b))
                        .collect();
                Ok(ModelState::Wavefunction(StateVector::new(amps)?))
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
enum Checkpoint {
    Rbm(RbmCheckpoint),
    Rnn(RnnCheckpoint),
    Wavefunction(WavefunctionCheckpoint),
}

#[derive(Serialize, Deserialize)]
struct WavefunctionCheckpoint {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn checkpoints_round_trip_exactly() {
        let mut g = rng::stream(1, 0);
        let models = [
            ModelState::Rbm(RbmParams::random(3, 2, 0.3, &mut g)),
            ModelState::Rnn(RnnParams::random(3, 4, 0.7, true, &mut g)),
            ModelState::Wavefunction(StateVector::random(2, &mut g)),
        ];
        for m in models {
            let back = ModelState::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn rejects_malformed_checkpoints() {
        assert!(ModelState::from_json(
            r#"{"model":"rnn","n_qubits":2,"n_hidden":2,"params":[1.0]}"#
        )
        .is_err());
        assert!(ModelState::from_json(r#"{"model":"cnn"}"#).is_err());
        assert!(ModelState::from_json(
            r#"{"model":"wavefunction","n":1,"re":[1.0,1.0],"im":[0.0,0.0]}"#
        )
        .is_err());
    }
}
