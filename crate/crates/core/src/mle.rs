//! Maximum-likelihood pure-state tomography by fixed-point iteration.
//!
//! At a stationary point of the cross-entropy loss the explicit amplitude
//! vector satisfies φ = T(φ) with
//! T(φ) = (1/|𝒟|) Σ_k Σ_σ n_{k,σ} R_k|σ⟩ / ⟨φ|R_k|σ⟩.
//! Iteration uses the damped map T̃(φ) = (φ + T(φ)) / ‖φ + T(φ)‖.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::bits::format_bits;
use crate::error::{Error, Result};
use crate::pauli::PauliHamiltonian;
use crate::sampler::WeightedData;
use crate::statevec::{inner, rotate_in_place, GroundstateResult, Rotation, StateVector};
use crate::train;

/// Overlaps at or below this magnitude trip the division guard.
pub const OVERLAP_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointConfig {
    pub max_iterations: usize,
    /// Bound on ‖φ_{t+1} − φ_t‖ after phase alignment.
    pub convergence_tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            max_iterations: 10_000,
            convergence_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub loss: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Zero for the starting record.
    pub step_norm: f64,
}

pub type Trajectory = Vec<TrajectoryRecord>;

/// Optional reference used to attach energy error and infidelity to each
/// trajectory record.
#[derive(Clone, Copy, Debug)]
pub struct Reference<'a> {
    pub hamiltonian: &'a PauliHamiltonian,
    pub exact: &'a GroundstateResult,
}

#[derive(Clone, Debug)]
pub struct FixedPointResult {
    pub state: StateVector,
    pub trajectory: Trajectory,
    pub converged: bool,
    pub iterations: usize,
}

/// T(φ), unnormalized.
pub fn apply_t(state: &StateVector, data: &WeightedData) -> Result<Vec<Complex64>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if state.n_qubits() != data.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: data.n_qubits,
            got: state.n_qubits(),
        });
    }
    let dim = state.dim();
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
    for (k, (basis, entries)) in data.bases.iter().zip(&data.entries).enumerate() {
        let mut rotated = state.amplitudes().to_vec();
        rotate_in_place(&mut rotated, &basis.ops, Rotation::Dagger);
        scratch
            .iter_mut()
            .for_each(|x| *x = Complex64::new(0.0, 0.0));
        for &(sigma, w) in entries {
            // ⟨φ|R_k|σ⟩ = conj(⟨σ|R_k†|φ⟩)
            let overlap = rotated[sigma].conj();
            if overlap.norm() <= OVERLAP_FLOOR {
                return Err(Error::ZeroProbability {
                    basis: k,
                    sigma: format_bits(sigma, data.n_qubits),
                });
            }
            scratch[sigma] += w / overlap;
        }
        rotate_in_place(&mut scratch, &basis.ops, Rotation::Forward);
        acc.iter_mut().zip(&scratch).for_each(|(a, s)| *a += s);
    }
    let inv = 1.0 / data.total;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

/// T̃(φ) = (φ + T(φ)) / ‖φ + T(φ)‖
pub fn apply_t_smoothed(state: &StateVector, data: &WeightedData) -> Result<StateVector> {
    let t = apply_t(state, data)?;
    StateVector::from_unnormalized(
        state
            .amplitudes()
            .iter()
            .zip(t)
            .map(|(a, b)| a + b)
            .collect(),
    )
}

/// Rotates `next` by a global phase so ⟨next|prev⟩ is real and
/// non-negative, and returns ‖next − prev‖ afterwards.
pub fn align_phase(next: &mut StateVector, prev: &StateVector) -> f64 {
    let ov = inner(next.amplitudes(), prev.amplitudes());
    let aligned: Vec<Complex64> = if ov.norm() > 0.0 {
        let phase = ov / ov.norm();
        next.amplitudes().iter().map(|a| a * phase).collect()
    } else {
        next.amplitudes().to_vec()
    };
    let diff = aligned
        .iter()
        .zip(prev.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    *next = StateVector::from_unnormalized(aligned).expect("aligned state is non-zero");
    diff
}

fn record(
    iteration: usize,
    state: &StateVector,
    data: &WeightedData,
    reference: Option<Reference<'_>>,
    step_norm: f64,
) -> Result<TrajectoryRecord> {
    let loss = train::loss(state, data)?.loss;
    let (epsilon, delta) = match reference {
        Some(r) => (
            Some(analysis::epsilon(state, r.hamiltonian, r.exact)?),
            Some(analysis::delta(state, &r.exact.state)?),
        ),
        None => (None, None),
    };
    Ok(TrajectoryRecord {
        iteration,
        loss,
        epsilon,
        delta,
        step_norm,
    })
}

/// Applies T̃ from `start` until the phase-aligned step falls below the
/// tolerance. When the iteration budget runs out the lowest-loss iterate is
/// returned with `converged = false`.
pub fn iterate(
    start: &StateVector,
    data: &WeightedData,
    cfg: &FixedPointConfig,
    reference: Option<Reference<'_>>,
) -> Result<FixedPointResult> {
    if cfg.convergence_tol.is_nan() || cfg.convergence_tol <= 0.0 {
        return Err(Error::InvalidArgument(
            "convergence_tol must be positive".into(),
        ));
    }
    let mut current = start.clone();
    let mut trajectory = vec![record(0, &current, data, reference, 0.0)?];
    let mut best = (trajectory[0].loss, current.clone());
    for it in 1..=cfg.max_iterations {
        let mut next = apply_t_smoothed(&current, data)?;
        let step = align_phase(&mut next, &current);
        let rec = record(it, &next, data, reference, step)?;
        if rec.loss < best.0 {
            best = (rec.loss, next.clone());
        }
        trajectory.push(rec);
        current = next;
        if step < cfg.convergence_tol {
            return Ok(FixedPointResult {
                state: current,
                trajectory,
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(FixedPointResult {
        state: best.1,
        trajectory,
        converged: false,
        iterations: cfg.max_iterations,
    })
}

/// Converged loss of the fixed-point iteration from `start`; the ℒ_min
/// reference line for trajectories.
pub fn loss_minimum_estimate(
    data: &WeightedData,
    start: &StateVector,
    cfg: &FixedPointConfig,
) -> Result<f64> {
    let r = iterate(start, data, cfg, None)?;
    Ok(train::loss(&r.state, data)?.loss)
}
