//! Goodness-of-fit checks for the samplers and the shadow estimator. All
//! seeds are fixed, so each check is deterministic.

mod common;

use common::{all_bases, born, dense_expectation, hamiltonian_matrix, random_hamiltonian};
use nqs_core::pauli::{MeasurementBasis, PauliHamiltonian, PauliTerm};
use nqs_core::rng::stream;
use nqs_core::rnn::RnnParams;
use nqs_core::sampler::sample_dataset;
use nqs_core::shadows::{collect_shadows, estimate_energy, stream_energy, EstimateOptions};
use nqs_core::statevec::StateVector;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson statistic with cells of expected count below 5 pooled; returns
/// (statistic, degrees of freedom).
fn pearson(observed: &[u64], probs: &[f64], total: u64) -> (f64, usize) {
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total as f64;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    let stat = cells
        .iter()
        .filter(|c| c.1 > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    (stat, cells.len().saturating_sub(1))
}

fn critical(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - 1e-6)
}

#[test]
fn sampled_histograms_follow_the_born_rule() {
    let bases: Vec<MeasurementBasis> = ["ZZ", "XY", "YX"]
        .iter()
        .map(|s| MeasurementBasis::parse(s).unwrap())
        .collect();
    let shots = 6000;
    for trial in 0..100u64 {
        let target = StateVector::random(2, &mut stream(trial, 5));
        let d = sample_dataset(&target, &bases, shots, trial).unwrap();
        let per_basis: Vec<u64> = (0..bases.len()).map(|k| d.basis_shots(k)).collect();
        let (stat, df) = pearson(&per_basis, &[1.0 / 3.0; 3], shots);
        assert!(stat < critical(df), "basis allocation, trial {trial}");
        for (k, b) in bases.iter().enumerate() {
            let p = born(&target, b);
            let observed: Vec<u64> = (0..4)
                .map(|s| *d.histograms[k].get(&s).unwrap_or(&0))
                .collect();
            let (stat, df) = pearson(&observed, &p, per_basis[k]);
            if df > 0 {
                assert!(stat < critical(df), "trial {trial}, basis {k}: χ² = {stat}");
            }
        }
    }
}

#[test]
fn total_variation_shrinks_with_shots() {
    let target = StateVector::random(3, &mut stream(1, 0));
    let bases = all_bases(3);
    let b = &bases[5..6];
    let p = born(&target, &b[0]);
    let tv = |shots: u64| {
        let d = sample_dataset(&target, b, shots, 9).unwrap();
        p.iter()
            .enumerate()
            .map(|(s, &ps)| {
                (*d.histograms[0].get(&s).unwrap_or(&0) as f64 / shots as f64 - ps).abs()
            })
            .sum::<f64>()
            / 2.0
    };
    // E[TV] ≈ Σ √(p(1−p)/(2πS)) ≤ 0.6/√S for 8 outcomes
    assert!(tv(1_000) < 6.0 * 0.6 / 1_000f64.sqrt());
    assert!(tv(100_000) < 6.0 * 0.6 / 100_000f64.sqrt());
}

#[test]
fn rnn_samples_follow_its_amplitudes() {
    for trial in 0..5u64 {
        let p = RnnParams::random(4, 3, 1.2, true, &mut stream(trial, 0));
        let probs = p.to_statevector().unwrap().probabilities();
        let draws = 20_000;
        let mut counts = vec![0u64; 16];
        for s in p.autoregressive_sample(draws, trial) {
            counts[s] += 1;
        }
        let (stat, df) = pearson(&counts, &probs, draws as u64);
        assert!(stat < critical(df), "trial {trial}: χ² = {stat}");
    }
}

fn two_qubit_instance() -> (PauliHamiltonian, StateVector) {
    let h = PauliHamiltonian::from_terms(
        "",
        2,
        [
            ("ZZ", -1.0),
            ("XI", -0.6),
            ("IX", -0.6),
            ("YY", 0.3),
            ("II", 0.25),
        ]
        .iter()
        .map(|(s, c)| PauliTerm::parse(s, *c).unwrap()),
    )
    .unwrap();
    let target = StateVector::random(2, &mut stream(77, 0));
    (h, target)
}

#[test]
fn shadow_estimates_are_unbiased() {
    let (h, target) = two_qubit_instance();
    let exact = dense_expectation(&hamiltonian_matrix(&h), &target);
    let reps = 200;
    let estimates: Vec<f64> = (0..reps)
        .map(|r| {
            stream_energy(&h, &target, 10_000, 1000 + r, &EstimateOptions::default())
                .unwrap()
                .energy
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    assert!(
        (mean - exact).abs() < 5.0 * se,
        "mean {mean}, exact {exact}, se {se}"
    );
}

#[test]
fn shadow_variance_scales_inversely_with_shots() {
    let (h, target) = two_qubit_instance();
    let reps = 200;
    let scaled: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&s| {
            let e: Vec<f64> = (0..reps)
                .map(|r| {
                    stream_energy(&h, &target, s, s * 7919 + r, &EstimateOptions::default())
                        .unwrap()
                        .energy
                })
                .collect();
            let m = e.iter().sum::<f64>() / reps as f64;
            s as f64 * e.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64
        })
        .collect();
    let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
    let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
    assert!(hi / lo < 1.5, "S·Var(Ē) = {scaled:?}");
}

#[test]
fn identity_offset_carries_no_shot_noise() {
    let mut h = random_hamiltonian(3, 4, &mut stream(3, 0));
    h.terms.clear();
    h.identity_offset = -1.75;
    let target = StateVector::random(3, &mut stream(4, 0));
    let est = estimate_energy(&h, &collect_shadows(&target, 500, 1).unwrap()).unwrap();
    assert_eq!(est.energy, -1.75);
    assert_eq!(est.standard_error, 0.0);
}
