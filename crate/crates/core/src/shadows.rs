//! Uniform classical-shadow energy estimation.
//!
//! Every shot measures each qubit along an axis drawn uniformly from
//! {X, Y, Z}. A Pauli term P is estimated per shot by 3^{|supp P|} times the
//! product of the measured eigenvalues when all supported axes match P, and
//! by zero otherwise.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{parity, qubit_mask};
use crate::error::{Error, Result};
use crate::pauli::{MeasurementBasis, Pauli, PauliHamiltonian};
use crate::rng;
use crate::sampler::{exact_distribution, CdfSampler};
use crate::statevec::StateVector;

/// Shots per independent RNG stream.
const CHUNK: u64 = 1 << 16;
const AXES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowSample {
    pub axes: Vec<Pauli>,
    pub outcome: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowEstimate {
    /// Hartree, identity offset included.
    pub energy: f64,
    pub shots: u64,
    /// Standard error of `energy` from the per-shot spread.
    pub standard_error: f64,
    /// Mean per-shot estimate of each term's expectation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_term_estimates: Option<Vec<f64>>,
    /// Median of group means, diagnostic only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_of_means: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct EstimateOptions {
    pub per_term: bool,
    /// Number of contiguous groups for the median-of-means diagnostic.
    pub median_of_means_groups: Option<usize>,
}

/// Draws shadow shots from exact Born distributions, one chunk of shots per
/// child stream so any shot can be regenerated independently of the rest.
struct ShadowSource<'a> {
    target: &'a StateVector,
    cache: HashMap<usize, CdfSampler>,
    rng: ChaCha8Rng,
    seed: u64,
    produced: u64,
}

impl<'a> ShadowSource<'a> {
    fn new(target: &'a StateVector, seed: u64) -> Self {
        ShadowSource {
            target,
            cache: HashMap::new(),
            rng: rng::stream(seed, 0),
            seed,
            produced: 0,
        }
    }

    /// Returns the axes as a base-3 code (qubit 0 most significant, 0=X,
    /// 1=Y, 2=Z) and the outcome index.
    fn next(&mut self) -> (usize, usize) {
        if self.produced.is_multiple_of(CHUNK) {
            self.rng = rng::stream(self.seed, self.produced / CHUNK);
        }
        self.produced += 1;
        let n = self.target.n_qubits();
        let mut code = 0usize;
        for _ in 0..n {
            code = code * 3 + self.rng.random_range(0..3usize);
        }
        let target = self.target;
        let sampler = self.cache.entry(code).or_insert_with(|| {
            let basis = MeasurementBasis {
                ops: decode_axes(code, n),
                covered_terms: vec![],
            };
            CdfSampler::new(&exact_distribution(target, &basis).expect("matching dimensions"))
        });
        (code, sampler.draw(&mut self.rng))
    }
}

fn decode_axes(mut code: usize, n: usize) -> Vec<Pauli> {
    let mut axes = vec![Pauli::Z; n];
    for q in (0..n).rev() {
        axes[q] = AXES[code % 3];
        code /= 3;
    }
    axes
}

pub fn collect_shadows(target: &StateVector, shots: u64, seed: u64) -> Result<Vec<ShadowSample>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    let mut src = ShadowSource::new(target, seed);
    Ok((0..shots)
        .map(|_| {
            let (code, outcome) = src.next();
            ShadowSample {
                axes: decode_axes(code, target.n_qubits()),
                outcome,
            }
        })
        .collect())
}

/// Per-term data for the compatibility test against a shot's axis masks.
struct TermProbe {
    x: usize,
    y: usize,
    z: usize,
    support: usize,
    scale: f64,
    coeff: f64,
}

struct Reducer {
    probes: Vec<TermProbe>,
    offset: f64,
    n_qubits: usize,
    term_sums: Vec<f64>,
    sum: f64,
    sum_sq: f64,
    count: u64,
    groups: Option<(usize, u64, Vec<f64>, Vec<u64>)>,
}

impl Reducer {
    fn new(h: &PauliHamiltonian, shots: u64, opts: &EstimateOptions) -> Self {
        let n = h.n_qubits;
        let probes = h
            .terms
            .iter()
            .map(|t| {
                let mut p = TermProbe {
                    x: 0,
                    y: 0,
                    z: 0,
                    support: 0,
                    scale: 3f64.powi(t.weight() as i32),
                    coeff: t.coeff,
                };
                for (q, &op) in t.ops.iter().enumerate() {
                    let m = qubit_mask(q, n);
                    match op {
                        Pauli::I => continue,
                        Pauli::X => p.x |= m,
                        Pauli::Y => p.y |= m,
                        Pauli::Z => p.z |= m,
                    }
                    p.support |= m;
                }
                p
            })
            .collect::<Vec<_>>();
        let groups = opts
            .median_of_means_groups
            .filter(|&g| g > 0)
            .map(|g| (g, shots, vec![0.0; g], vec![0u64; g]));
        Reducer {
            term_sums: vec![0.0; probes.len()],
            probes,
            offset: h.identity_offset,
            n_qubits: n,
            sum: 0.0,
            sum_sq: 0.0,
            count: 0,
            groups,
        }
    }

    fn push(&mut self, axes: &[Pauli], outcome: usize) {
        let (mut xm, mut ym, mut zm) = (0, 0, 0);
        for (q, &a) in axes.iter().enumerate() {
            let m = qubit_mask(q, self.n_qubits);
            match a {
                Pauli::X => xm |= m,
                Pauli::Y => ym |= m,
                _ => zm |= m,
            }
        }
        let mut e = self.offset;
        for (i, p) in self.probes.iter().enumerate() {
            if p.x & !xm == 0 && p.y & !ym == 0 && p.z & !zm == 0 {
                let v = p.scale * parity(outcome & p.support);
                self.term_sums[i] += v;
                e += p.coeff * v;
            }
        }
        if let Some((g, total, sums, counts)) = &mut self.groups {
            let idx = ((self.count as u128 * *g as u128) / *total as u128) as usize;
            sums[idx] += e;
            counts[idx] += 1;
        }
        self.sum += e;
        self.sum_sq += e * e;
        self.count += 1;
    }

    fn finish(self, per_term: bool) -> ShadowEstimate {
        let s = self.count as f64;
        let mean = self.sum / s;
        let var = if self.count > 1 {
            ((self.sum_sq - s * mean * mean) / (s - 1.0)).max(0.0)
        } else {
            0.0
        };
        let median_of_means = self.groups.map(|(_, _, sums, counts)| {
            let mut means: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c > 0)
                .map(|(s, &c)| s / c as f64)
                .collect();
            means.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = means.len();
            if m % 2 == 1 {
                means[m / 2]
            } else {
                0.5 * (means[m / 2 - 1] + means[m / 2])
            }
        });
        ShadowEstimate {
            energy: mean,
            shots: self.count,
            standard_error: (var / s).sqrt(),
            per_term_estimates: per_term.then(|| self.term_sums.iter().map(|t| t / s).collect()),
            median_of_means,
        }
    }
}

/// Ē from stored samples.
pub fn estimate_energy(h: &PauliHamiltonian, samples: &[ShadowSample]) -> Result<ShadowEstimate> {
    estimate_energy_with(h, samples, &EstimateOptions::default())
}

pub fn estimate_energy_with(
    h: &PauliHamiltonian,
    samples: &[ShadowSample],
    opts: &EstimateOptions,
) -> Result<ShadowEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no shadow samples".into()));
    }
    let mut r = Reducer::new(h, samples.len() as u64, opts);
    for s in samples {
        if s.axes.len() != h.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: h.n_qubits,
                got: s.axes.len(),
            });
        }
        r.push(&s.axes, s.outcome);
    }
    Ok(r.finish(opts.per_term))
}

/// Generates and reduces shots online without storing them. Produces the
/// same estimate as [`collect_shadows`] followed by [`estimate_energy`].
pub fn stream_energy(
    h: &PauliHamiltonian,
    target: &StateVector,
    shots: u64,
    seed: u64,
    opts: &EstimateOptions,
) -> Result<ShadowEstimate> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    if target.n_qubits() != h.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: h.n_qubits,
            got: target.n_qubits(),
        });
    }
    let n = h.n_qubits;
    let mut src = ShadowSource::new(target, seed);
    let mut r = Reducer::new(h, shots, opts);
    let mut axes = vec![Pauli::Z; n];
    for _ in 0..shots {
        let (code, outcome) = src.next();
        let mut c = code;
        for q in (0..n).rev() {
            axes[q] = AXES[c % 3];
            c /= 3;
        }
        r.push(&axes, outcome);
    }
    Ok(r.finish(opts.per_term))
}
