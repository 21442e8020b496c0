//! Error metrics, per-budget summaries and log-log power-law fits.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{MeasurementBasis, PauliHamiltonian};
use crate::sampler::exact_distribution;
use crate::statevec::{expectation, fidelity, GroundstateResult, StateVector};

/// Most negative ε accepted from a variational state before it is treated as
/// a numerical failure.
pub const EPSILON_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rbm,
    Rnn,
    Wavefunction,
    Shadows,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Rbm,
        Method::Rnn,
        Method::Wavefunction,
        Method::Shadows,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rbm => "rbm",
            Method::Rnn => "rnn",
            Method::Wavefunction => "wavefunction",
            Method::Shadows => "shadows",
        }
    }

    /// Stable identifier mixed into child seeds.
    pub fn id(self) -> u64 {
        match self {
            Method::Rbm => 1,
            Method::Rnn => 2,
            Method::Wavefunction => 3,
            Method::Shadows => 4,
        }
    }

    pub fn produces_state(self) -> bool {
        self != Method::Shadows
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (method, S, seed) outcome. `delta` is present exactly when the method
/// yields a state; `g_error` holds G − H.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub method: Method,
    pub shots: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub g_error: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// d log10 S / d log10 q.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Epsilon,
    Delta,
    /// G − H.
    Generalization,
}

impl Quality {
    pub fn of(self, r: &ScalingRecord) -> Option<f64> {
        match self {
            Quality::Epsilon => Some(r.epsilon),
            Quality::Delta => r.delta,
            Quality::Generalization => r.g_error,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Epsilon => "epsilon",
            Quality::Delta => "delta",
            Quality::Generalization => "g_error",
        }
    }
}

impl std::str::FromStr for Quality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(Quality::Epsilon),
            "delta" => Ok(Quality::Delta),
            "g_error" | "generalization" => Ok(Quality::Generalization),
            _ => Err(Error::InvalidArgument(format!("unknown quality '{s}'"))),
        }
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// ε = ⟨φ|H|φ⟩ − E₀, signed.
pub fn epsilon(
    state: &StateVector,
    h: &PauliHamiltonian,
    exact: &GroundstateResult,
) -> Result<f64> {
    check_dims(exact.state.n_qubits(), state.n_qubits())?;
    Ok(expectation(h, state)? - exact.energy)
}

/// Clamps a variational ε at zero, rejecting values below −tolerance.
pub fn clamp_epsilon(eps: f64) -> Result<f64> {
    if !eps.is_finite() || eps < -EPSILON_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "energy error {eps} lies below the groundstate energy"
        )));
    }
    Ok(eps.max(0.0))
}

/// |Ē − E₀| for an estimate that carries no state.
pub fn shadow_epsilon(estimate: f64, exact_energy: f64) -> f64 {
    (estimate - exact_energy).abs()
}

/// δ = 1 − |⟨φ|ψ⟩|²
pub fn delta(state: &StateVector, exact: &StateVector) -> Result<f64> {
    Ok((1.0 - fidelity(state, exact)?).max(0.0))
}

/// G = −(1/K) Σ_k Σ_σ p_k(σ) log|⟨σ|R_k†|φ⟩|² with exact target
/// probabilities; +∞ when the model vanishes on a supported outcome.
pub fn generalization_error(
    model: &StateVector,
    target: &StateVector,
    bases: &[MeasurementBasis],
) -> Result<f64> {
    check_dims(target.n_qubits(), model.n_qubits())?;
    if bases.is_empty() {
        return Err(Error::InvalidArgument("no measurement bases".into()));
    }
    let mut acc = 0.0;
    for b in bases {
        let p = exact_distribution(target, b)?;
        let q = exact_distribution(model, b)?;
        for (&pi, &qi) in p.iter().zip(&q) {
            if pi > 0.0 {
                if qi <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                acc -= pi * qi.ln();
            }
        }
    }
    Ok(acc / bases.len() as f64)
}

/// H = −(1/K) Σ_k Σ_σ p_k(σ) log p_k(σ)
pub fn entropy_h(target: &StateVector, bases: &[MeasurementBasis]) -> Result<f64> {
    if bases.is_empty() {
        return Err(Error::InvalidArgument("no measurement bases".into()));
    }
    let mut acc = 0.0;
    for b in bases {
        acc -= exact_distribution(target, b)?
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>();
    }
    Ok(acc / bases.len() as f64)
}

/// OLS of log10 S (response) on log10 q (regressor).
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(s, q)| !(s > 0.0 && q > 0.0 && s.is_finite() && q.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "power-law fit needs positive finite values".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "all quality values are equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
    })
}

/// Mean quality at one shot budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub shots: u64,
    pub mean: f64,
    /// Standard error of the mean; zero for a single sample.
    pub std_error: f64,
    pub count: usize,
}

/// Per-S arithmetic means of `quality` over the records of one method,
/// ordered by S. Records without the quality are skipped.
pub fn summarize(records: &[ScalingRecord], method: Method, quality: Quality) -> Vec<SummaryPoint> {
    let mut by_s: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.method == method) {
        if let Some(v) = quality.of(r) {
            by_s.entry(r.shots).or_default().push(v);
        }
    }
    by_s.into_iter()
        .map(|(shots, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let std_error = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            SummaryPoint {
                shots,
                mean,
                std_error,
                count: v.len(),
            }
        })
        .collect()
}

pub fn fit_summary(points: &[SummaryPoint]) -> Result<PowerLawFit> {
    fit_power_law(
        &points
            .iter()
            .map(|p| (p.shots as f64, p.mean))
            .collect::<Vec<_>>(),
    )
}

#[derive(Serialize, Deserialize)]
struct RecordRow {
    method: Method,
    shots: u64,
    seed: u64,
    epsilon: f64,
    delta: Option<f64>,
    g_error: Option<f64>,
}

/// CSV columns: method, shots, seed, epsilon, delta, g_error. Absent values
/// are empty cells.
pub fn write_records<W: Write>(records: &[ScalingRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(RecordRow {
            method: r.method,
            shots: r.shots,
            seed: r.seed,
            epsilon: r.epsilon,
            delta: r.delta,
            g_error: r.g_error,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<ScalingRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize::<RecordRow>()
        .map(|row| {
            let row = row?;
            let rec = ScalingRecord {
                method: row.method,
                shots: row.shots,
                seed: row.seed,
                epsilon: row.epsilon,
                delta: row.delta,
                g_error: row.g_error,
            };
            if rec.delta.is_some() != rec.method.produces_state() {
                return Err(Error::Format(format!(
                    "delta must be present exactly for state-producing methods ({} at S = {})",
                    rec.method, rec.shots
                )));
            }
            Ok(rec)
        })
        .collect()
}

pub fn save_records(records: &[ScalingRecord], path: impl AsRef<Path>) -> Result<()> {
    write_records(records, std::fs::File::create(path)?)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<ScalingRecord>> {
    read_records(std::fs::File::open(path)?)
}

/// One cell of a (S, log10 q) histogram. `sum` carries the raw quality total
/// of the cell so per-S means can be recovered from the table alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramCell {
    pub method: Method,
    pub quality: Quality,
    pub shots: u64,
    pub bin: usize,
    pub log10_lower: f64,
    pub log10_upper: f64,
    pub count: u64,
    pub sum: f64,
}

/// Bins the positive values of `quality` for each (method, S) on a shared
/// log10 grid of `bins` cells spanning all values. Non-positive values fall
/// into bin 0. Only non-empty cells are emitted.
pub fn histogram(
    records: &[ScalingRecord],
    quality: Quality,
    bins: usize,
) -> Result<Vec<HistogramCell>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let logs: Vec<f64> = records
        .iter()
        .filter_map(|r| quality.of(r))
        .filter(|&v| v > 0.0 && v.is_finite())
        .map(f64::log10)
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if logs.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut cells: BTreeMap<(Method, u64, usize), (u64, f64)> = BTreeMap::new();
    for r in records {
        let Some(v) = quality.of(r) else { continue };
        if !v.is_finite() {
            continue;
        }
        let bin = if v > 0.0 {
            (((v.log10() - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        let c = cells.entry((r.method, r.shots, bin)).or_insert((0, 0.0));
        c.0 += 1;
        c.1 += v;
    }
    Ok(cells
        .into_iter()
        .map(|((method, shots, bin), (count, sum))| HistogramCell {
            method,
            quality,
            shots,
            bin,
            log10_lower: lo + width * bin as f64,
            log10_upper: lo + width * (bin + 1) as f64,
            count,
            sum,
        })
        .collect())
}

/// Per-(method, S) means recovered from histogram cells.
pub fn histogram_means(cells: &[HistogramCell]) -> BTreeMap<(Method, u64), f64> {
    let mut acc: BTreeMap<(Method, u64), (u64, f64)> = BTreeMap::new();
    for c in cells {
        let e = acc.entry((c.method, c.shots)).or_insert((0, 0.0));
        e.0 += c.count;
        e.1 += c.sum;
    }
    acc.into_iter()
        .map(|(k, (n, s))| (k, s / n as f64))
        .collect()
}

pub fn write_histogram<W: Write>(cells: &[HistogramCell], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for c in cells {
        out.serialize(c)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_histogram<R: Read>(r: R) -> Result<Vec<HistogramCell>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}
