//! Synthetic projective-measurement datasets.
//!
//! Each shot picks a basis uniformly at random and then an outcome from the
//! exact rotated Born distribution. Outcomes are stored as per-basis
//! histograms, so storage is bounded by K·2^N whatever the shot count.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{format_bits, parse_bits};
use crate::error::{Error, Result};
use crate::pauli::MeasurementBasis;
use crate::rng;
use crate::statevec::{rotate_in_place, Rotation, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n_qubits: usize,
    pub bases: Vec<MeasurementBasis>,
    /// One histogram per basis, keyed by outcome index.
    pub histograms: Vec<BTreeMap<usize, u64>>,
    pub total_shots: u64,
    pub seed: u64,
}

/// |⟨σ|R_k†|ψ⟩|² for every outcome index σ.
pub fn exact_distribution(target: &StateVector, basis: &MeasurementBasis) -> Result<Vec<f64>> {
    if basis.n_qubits() != target.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: target.n_qubits(),
            got: basis.n_qubits(),
        });
    }
    let mut v = target.amplitudes().to_vec();
    rotate_in_place(&mut v, &basis.ops, Rotation::Dagger);
    Ok(v.iter().map(|a| a.norm_sqr()).collect())
}

/// Inverse-CDF sampler over a fixed discrete distribution.
pub(crate) struct CdfSampler {
    cdf: Vec<f64>,
}

impl CdfSampler {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        CdfSampler { cdf }
    }

    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap();
        let u: f64 = rng.random::<f64>() * total;
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

pub fn sample_dataset(
    target: &StateVector,
    bases: &[MeasurementBasis],
    shots: u64,
    seed: u64,
) -> Result<Dataset> {
    if bases.is_empty() {
        return Err(Error::InvalidArgument("no measurement bases".into()));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    let k_count = bases.len();
    // stream 0 allocates shots to bases; stream k+1 draws basis k's outcomes
    let mut alloc = rng::stream(seed, 0);
    let mut per_basis = vec![0u64; k_count];
    for _ in 0..shots {
        per_basis[alloc.random_range(0..k_count)] += 1;
    }
    let mut histograms = Vec::with_capacity(k_count);
    for (k, basis) in bases.iter().enumerate() {
        let sampler = CdfSampler::new(&exact_distribution(target, basis)?);
        let mut g = rng::stream(seed, k as u64 + 1);
        let mut hist = BTreeMap::new();
        for _ in 0..per_basis[k] {
            *hist.entry(sampler.draw(&mut g)).or_insert(0) += 1;
        }
        histograms.push(hist);
    }
    Ok(Dataset {
        n_qubits: target.n_qubits(),
        bases: bases.to_vec(),
        histograms,
        total_shots: shots,
        seed,
    })
}

impl Dataset {
    pub fn num_entries(&self) -> usize {
        self.histograms.iter().map(|h| h.len()).sum()
    }

    pub fn basis_shots(&self, k: usize) -> u64 {
        self.histograms[k].values().sum()
    }

    /// Histogram-weighted view used by the loss, gradient and fixed-point
    /// routines.
    pub fn weighted(&self) -> WeightedData {
        WeightedData {
            n_qubits: self.n_qubits,
            bases: self.bases.clone(),
            entries: self
                .histograms
                .iter()
                .map(|h| h.iter().map(|(&s, &c)| (s, c as f64)).collect())
                .collect(),
            total: self.total_shots as f64,
        }
    }

    /// −(1/|D|) Σ_k Σ_σ n log(n/|D_k|): the smallest cross entropy any
    /// family of per-basis distributions can reach on this data.
    pub fn empirical_entropy(&self) -> f64 {
        self.weighted().empirical_entropy()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(w)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_jsonl(BufReader::new(std::fs::File::open(path)?))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = DatasetHeader {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            n: self.n_qubits,
            shots: self.total_shots,
            seed: self.seed,
            bases: self.bases.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        for (k, hist) in self.histograms.iter().enumerate() {
            for (&sigma, &count) in hist {
                let line = DatasetLine {
                    k,
                    sigma: format_bits(sigma, self.n_qubits),
                    count,
                };
                serde_json::to_writer(&mut w, &line)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Format("empty dataset file".into()))??;
        let header: DatasetHeader = serde_json::from_str(&first)
            .map_err(|e| Error::Format(format!("bad dataset header: {e}")))?;
        if header.format != DATASET_FORMAT {
            return Err(Error::Format(format!(
                "not a dataset file (format {:?})",
                header.format
            )));
        }
        if header.version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "dataset version {} is not supported (expected {DATASET_VERSION})",
                header.version
            )));
        }
        if header.bases.iter().any(|b| b.n_qubits() != header.n) {
            return Err(Error::Format("basis length differs from n".into()));
        }
        let mut histograms = vec![BTreeMap::new(); header.bases.len()];
        let mut total = 0u64;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DatasetLine = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
            if rec.k >= histograms.len() || rec.sigma.len() != header.n || rec.count == 0 {
                return Err(Error::Format(format!(
                    "line {}: invalid record",
                    lineno + 2
                )));
            }
            let sigma = parse_bits(&rec.sigma)?;
            *histograms[rec.k].entry(sigma).or_insert(0) += rec.count;
            total += rec.count;
        }
        if total != header.shots {
            return Err(Error::Format(format!(
                "counts sum to {total} but header declares {} shots",
                header.shots
            )));
        }
        Ok(Dataset {
            n_qubits: header.n,
            bases: header.bases,
            histograms,
            total_shots: header.shots,
            seed: header.seed,
        })
    }
}

const DATASET_FORMAT: &str = "nqs-dataset";
const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    version: u32,
    n: usize,
    shots: u64,
    seed: u64,
    bases: Vec<MeasurementBasis>,
}

#[derive(Serialize, Deserialize)]
struct DatasetLine {
    k: usize,
    sigma: String,
    count: u64,
}

/// Per-basis outcome weights. Finite datasets use raw counts; the
/// infinite-data limit uses Born probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedData {
    pub n_qubits: usize,
    pub bases: Vec<MeasurementBasis>,
    /// `entries[k]` lists (outcome index, weight) with positive weights.
    pub entries: Vec<Vec<(usize, f64)>>,
    /// Σ of all weights (|𝒟| for counts).
    pub total: f64,
}

impl WeightedData {
    /// Exact Born weights p_k(σ)/K; outcomes below 1e-30 are dropped.
    pub fn exact(target: &StateVector, bases: &[MeasurementBasis]) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::InvalidArgument("no measurement bases".into()));
        }
        let k_count = bases.len() as f64;
        let entries = bases
            .iter()
            .map(|b| {
                Ok(exact_distribution(target, b)?
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, p)| p > 1e-30)
                    .map(|(s, p)| (s, p / k_count))
                    .collect())
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        let total = entries.iter().flatten().map(|e| e.1).sum();
        Ok(WeightedData {
            n_qubits: target.n_qubits(),
            bases: bases.to_vec(),
            entries,
            total,
        })
    }

    /// Uncompressed shot list of (basis index, outcome index), one unit
    /// weight per shot in list order.
    pub fn from_shots(
        n_qubits: usize,
        bases: &[MeasurementBasis],
        shots: &[(usize, usize)],
    ) -> Result<Self> {
        let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); bases.len()];
        for &(k, s) in shots {
            if k >= bases.len() || s >= 1 << n_qubits {
                return Err(Error::InvalidArgument(format!("bad shot ({k}, {s})")));
            }
            entries[k].push((s, 1.0));
        }
        Ok(WeightedData {
            n_qubits,
            bases: bases.to_vec(),
            entries,
            total: shots.len() as f64,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.total <= 0.0 || self.entries.iter().all(|e| e.is_empty())
    }

    pub fn empirical_entropy(&self) -> f64 {
        let mut acc = 0.0;
        for e in &self.entries {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for &(s, w) in e {
                *merged.entry(s).or_insert(0.0) += w;
            }
            let basis_total: f64 = merged.values().sum();
            acc -= merged
                .values()
                .map(|&w| w * (w / basis_total).ln())
                .sum::<f64>();
        }
        acc / self.total
    }
}
