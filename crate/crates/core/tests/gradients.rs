//! Analytic loss gradients against central differences of the direct-sum
//! loss. Tolerances: step 1e-5, relative 1e-4, absolute floor 1e-8.

mod common;

use common::{all_bases, central_difference, direct_loss};
use nqs_core::model::Ansatz;
use nqs_core::rbm::RbmParams;
use nqs_core::rng::stream;
use nqs_core::rnn::RnnParams;
use nqs_core::sampler::{sample_dataset, WeightedData};
use nqs_core::statevec::StateVector;
use nqs_core::train::{gradient, loss_and_gradient};
use rand::Rng;

const STEP: f64 = 1e-5;
const REL: f64 = 1e-4;
const ABS: f64 = 1e-8;
const INSTANCES: u64 = 20;

fn data_for(n: usize, seed: u64) -> WeightedData {
    let mut g = stream(seed, 1);
    let target = StateVector::random(n, &mut g);
    let bases = all_bases(n);
    let k = g.random_range(1..=bases.len().min(4));
    let picked: Vec<_> = bases.into_iter().step_by(2).take(k).collect();
    sample_dataset(&target, &picked, 300, seed)
        .unwrap()
        .weighted()
}

fn check<A: Ansatz>(model: &A, data: &WeightedData) -> Result<(), String> {
    let analytic = gradient(model, data).map_err(|e| e.to_string())?;
    let mut probe = model.clone();
    let numeric = central_difference(&model.params(), STEP, |p| {
        probe.set_params(p);
        direct_loss(probe.amplitudes().unwrap().amplitudes(), data)
    });
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        if (a - n).abs() > REL * a.abs().max(n.abs()) + ABS {
            return Err(format!("parameter {i}: analytic {a:e}, numeric {n:e}"));
        }
    }
    Ok(())
}

#[test]
fn rbm_gradient_matches_finite_differences() {
    for inst in 0..INSTANCES {
        let mut g = stream(1000 + inst, 0);
        let n = g.random_range(1..=3);
        let nh = g.random_range(1..=4);
        let model = RbmParams::random(n, nh, 0.3, &mut g);
        let data = data_for(n, inst);
        if let Err(e) = check(&model, &data) {
            panic!("instance {inst} (N={n}, N_h={nh}): {e}");
        }
    }
}

#[test]
fn rnn_gradient_matches_finite_differences() {
    for inst in 0..INSTANCES {
        let mut g = stream(2000 + inst, 0);
        let n = g.random_range(1..=3);
        let nh = g.random_range(1..=4);
        let model = RnnParams::random(n, nh, 0.7, true, &mut g);
        let data = data_for(n, inst + 100);
        if let Err(e) = check(&model, &data) {
            panic!("instance {inst} (N={n}, N_h={nh}): {e}");
        }
    }
}

#[test]
fn histogram_and_shot_list_agree() {
    // Compressed counts and the expanded shot list give the same loss and
    // gradient.
    let mut g = stream(3, 0);
    let target = StateVector::random(2, &mut g);
    let bases = all_bases(2);
    let d = sample_dataset(&target, &bases[..3], 500, 11).unwrap();
    let mut shots = Vec::new();
    for (k, h) in d.histograms.iter().enumerate() {
        for (&s, &c) in h {
            shots.extend(std::iter::repeat_n((k, s), c as usize));
        }
    }
    // shot order differs from histogram order
    shots.sort_by_key(|&(k, s)| (s, k));
    let expanded = WeightedData::from_shots(2, &d.bases, &shots).unwrap();
    let compressed = d.weighted();
    let rbm = RbmParams::random(2, 3, 0.3, &mut g);
    let rnn = RnnParams::random(2, 3, 0.5, true, &mut g);
    let (la, ga) = loss_and_gradient(&rbm, &compressed).unwrap();
    let (lb, gb) = loss_and_gradient(&rbm, &expanded).unwrap();
    assert!((la.loss - lb.loss).abs() < 1e-12);
    assert!(ga.iter().zip(&gb).all(|(a, b)| (a - b).abs() < 1e-12));
    let (la, ga) = loss_and_gradient(&rnn, &compressed).unwrap();
    let (lb, gb) = loss_and_gradient(&rnn, &expanded).unwrap();
    assert!((la.loss - lb.loss).abs() < 1e-12);
    assert!(ga.iter().zip(&gb).all(|(a, b)| (a - b).abs() < 1e-12));
}
