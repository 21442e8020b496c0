//! Sweeps over methods, shot budgets and repetitions, plus the tables behind
//! the scaling, distribution and trajectory plots.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, clamp_epsilon, fit_summary, histogram, shadow_epsilon, summarize, HistogramCell, Method,
    PowerLawFit, Quality, ScalingRecord, SummaryPoint,
};
use crate::error::{Error, Result};
use crate::mle::{self, FixedPointConfig, Reference, Trajectory};
use crate::model::{Ansatz, ModelState};
use crate::pauli::{group_bases, load_hamiltonian, MeasurementBasis, PauliHamiltonian};
use crate::rbm::RbmParams;
use crate::rng;
use crate::rnn::RnnParams;
use crate::sampler::{sample_dataset, Dataset, WeightedData};
use crate::shadows::{stream_energy, EstimateOptions};
use crate::statevec::{groundstate, GroundstateResult, StateVector};
use crate::train::{self, TrainConfig};

/// Environment variable read for the default worker count.
pub const WORKERS_ENV: &str = "NQS_WORKERS";

/// Child-seed tag for parameter initialization, kept apart from the
/// sampling streams of the same run.
const INIT_TAG: u64 = 0x1417;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelPlan {
    pub n_hidden: usize,
    /// `seed` is replaced by a per-run child seed.
    pub train: TrainConfig,
}

impl Default for ModelPlan {
    fn default() -> Self {
        ModelPlan {
            n_hidden: 8,
            train: TrainConfig {
                learning_rate: 1e-2,
                epochs: 2000,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// `run_sweep` resolves a relative path against the working directory.
    #[serde(default)]
    pub hamiltonian_path: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub shot_grid: Vec<u64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub rbm: ModelPlan,
    #[serde(default)]
    pub rnn: ModelPlan,
    #[serde(default)]
    pub wavefunction: FixedPointConfig,
    /// Overrides the worker count from the environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_repetitions() -> usize {
    20
}

impl SweepPlan {
    pub fn new(
        methods: Vec<Method>,
        shot_grid: Vec<u64>,
        repetitions: usize,
        base_seed: u64,
    ) -> Self {
        SweepPlan {
            hamiltonian_path: None,
            methods,
            shot_grid,
            repetitions,
            base_seed,
            rbm: ModelPlan::default(),
            rnn: ModelPlan::default(),
            wavefunction: FixedPointConfig::default(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("sweep plan lists no methods".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::InvalidArgument("sweep plan repeats a method".into()));
        }
        if self.shot_grid.is_empty() || self.shot_grid[0] == 0 {
            return Err(Error::InvalidArgument(
                "shot grid must be non-empty and positive".into(),
            ));
        }
        if self.shot_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "shot grid must be strictly increasing".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument(
                "repetitions must be at least 1".into(),
            ));
        }
        for (m, p) in [(Method::Rbm, &self.rbm), (Method::Rnn, &self.rnn)] {
            if self.methods.contains(&m) {
                if p.n_hidden == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "{m}: n_hidden must be positive"
                    )));
                }
                p.train.validate()?;
            }
        }
        if self.wavefunction.convergence_tol.is_nan() || self.wavefunction.convergence_tol <= 0.0 {
            return Err(Error::InvalidArgument(
                "convergence_tol must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `points` values from `lo` to `hi` inclusive, evenly spaced in log10 and
/// rounded to integers.
pub fn geometric_grid(lo: u64, hi: u64, points: usize) -> Result<Vec<u64>> {
    if lo == 0 || hi <= lo || points < 2 {
        return Err(Error::InvalidArgument(
            "grid needs 0 < lo < hi and ≥ 2 points".into(),
        ));
    }
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let grid: Vec<u64> = (0..points)
        .map(|i| {
            10f64
                .powf(a + (b - a) * i as f64 / (points - 1) as f64)
                .round() as u64
        })
        .collect();
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "grid too dense to stay strictly increasing".into(),
        ));
    }
    Ok(grid)
}

/// Seed of run (method, S, rep); independent of dispatch order.
pub fn child_seed(base: u64, method: Method, shots: u64, rep: usize) -> u64 {
    rng::derive_seed(base, &[method.id(), shots, rep as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub method: Method,
    pub shots: u64,
    pub repetition: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<ScalingRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Fixed-point runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub quality: Quality,
    /// How repetitions are combined before fitting.
    pub averaging: String,
    pub points: Vec<SummaryPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<PowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub plan: SweepPlan,
    pub hamiltonian: String,
    pub n_qubits: usize,
    pub exact_energy: f64,
    pub runs: Vec<RunOutcome>,
    pub summaries: Vec<MethodSummary>,
    pub software_version: String,
    pub rng_scheme: String,
    pub wall_seconds: f64,
}

impl RunManifest {
    /// Successful records in run order.
    pub fn records(&self) -> Vec<ScalingRecord> {
        self.runs.iter().filter_map(|r| r.record.clone()).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.error.is_some())
    }

    pub fn summary(&self, method: Method, quality: Quality) -> Option<&MethodSummary> {
        self.summaries
            .iter()
            .find(|s| s.method == method && s.quality == quality)
    }

    /// Copy with every wall-time zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        let mut m = self.clone();
        m.wall_seconds = 0.0;
        m.runs.iter_mut().for_each(|r| r.wall_seconds = 0.0);
        m
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Worker count: explicit value, else the environment, else all cores.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok()?.parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_sweep(plan: &SweepPlan) -> Result<RunManifest> {
    let path = plan
        .hamiltonian_path
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("sweep plan has no hamiltonian_path".into()))?;
    let h = load_hamiltonian(path)?;
    run_sweep_with(plan, &h)
}

/// Runs `plan` on an in-memory Hamiltonian.
pub fn run_sweep_with(plan: &SweepPlan, h: &PauliHamiltonian) -> Result<RunManifest> {
    plan.validate()?;
    let started = Instant::now();
    let exact = groundstate(h)?;
    let bases = group_bases(h);
    let ctx = RunContext {
        plan,
        h,
        exact: &exact,
        bases: &bases,
        entropy: analysis::entropy_h(&exact.state, &bases)?,
    };
    let mut jobs = Vec::new();
    for &m in &plan.methods {
        for &s in &plan.shot_grid {
            for rep in 0..plan.repetitions {
                jobs.push((m, s, rep));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_workers(plan.workers))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut runs: Vec<RunOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, s, rep)| ctx.run_one(m, s, rep))
            .collect()
    });
    runs.sort_by_key(|r| (r.method, r.shots, r.repetition));
    let records: Vec<ScalingRecord> = runs.iter().filter_map(|r| r.record.clone()).collect();
    let mut summaries = Vec::new();
    for &m in &plan.methods {
        let qualities: &[Quality] = if m.produces_state() {
            &[Quality::Epsilon, Quality::Delta, Quality::Generalization]
        } else {
            &[Quality::Epsilon]
        };
        for &q in qualities {
            let points = summarize(&records, m, q);
            let (fit, fit_error) = match fit_summary(&points) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            summaries.push(MethodSummary {
                method: m,
                quality: q,
                averaging: "mean".into(),
                points,
                fit,
                fit_error,
            });
        }
    }
    Ok(RunManifest {
        plan: plan.clone(),
        hamiltonian: h.name.clone(),
        n_qubits: h.n_qubits,
        exact_energy: exact.energy,
        runs,
        summaries,
        software_version: env!("CARGO_PKG_VERSION").into(),
        rng_scheme: rng::SCHEME_ID.into(),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

struct RunContext<'a> {
    plan: &'a SweepPlan,
    h: &'a PauliHamiltonian,
    exact: &'a GroundstateResult,
    bases: &'a [MeasurementBasis],
    entropy: f64,
}

struct MethodOutput {
    record: ScalingRecord,
    converged: Option<bool>,
}

impl RunContext<'_> {
    fn run_one(&self, method: Method, shots: u64, repetition: usize) -> RunOutcome {
        let seed = child_seed(self.plan.base_seed, method, shots, repetition);
        let t = Instant::now();
        let result = self.execute(method, shots, seed);
        let wall_seconds = t.elapsed().as_secs_f64();
        let (record, error, converged) = match result {
            Ok(o) => (Some(o.record), None, o.converged),
            Err(e) => (None, Some(e.to_string()), None),
        };
        RunOutcome {
            method,
            shots,
            repetition,
            seed,
            record,
            error,
            converged,
            wall_seconds,
        }
    }

    fn execute(&self, method: Method, shots: u64, seed: u64) -> Result<MethodOutput> {
        if method == Method::Shadows {
            let est = stream_energy(
                self.h,
                &self.exact.state,
                shots,
                seed,
                &EstimateOptions::default(),
            )?;
            return Ok(MethodOutput {
                record: ScalingRecord {
                    method,
                    shots,
                    seed,
                    epsilon: shadow_epsilon(est.energy, self.exact.energy),
                    delta: None,
                    g_error: None,
                },
                converged: None,
            });
        }
        let data = sample_dataset(&self.exact.state, self.bases, shots, seed)?.weighted();
        let init_seed = rng::derive_seed(seed, &[INIT_TAG]);
        let n = self.h.n_qubits;
        let (state, converged) = match method {
            Method::Wavefunction => {
                let r = mle::iterate(&self.exact.state, &data, &self.plan.wavefunction, None)?;
                (r.state, Some(r.converged))
            }
            Method::Rbm => {
                let p = &self.plan.rbm;
                let init = RbmParams::init(n, p.n_hidden, &mut rng::stream(init_seed, 0));
                (train_state(init, &data, &p.train, init_seed)?, None)
            }
            Method::Rnn => {
                let p = &self.plan.rnn;
                let init = RnnParams::init(n, p.n_hidden, &mut rng::stream(init_seed, 0));
                (train_state(init, &data, &p.train, init_seed)?, None)
            }
            Method::Shadows => unreachable!(),
        };
        let g = analysis::generalization_error(&state, &self.exact.state, self.bases)?;
        Ok(MethodOutput {
            record: ScalingRecord {
                method,
                shots,
                seed,
                epsilon: clamp_epsilon(analysis::epsilon(&state, self.h, self.exact)?)?,
                delta: Some(analysis::delta(&state, &self.exact.state)?),
                g_error: Some(g - self.entropy),
            },
            converged,
        })
    }
}

fn train_state<A: Ansatz>(
    init: A,
    data: &WeightedData,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<StateVector> {
    let cfg = TrainConfig {
        seed,
        ..cfg.clone()
    };
    train::fit(init, data, &cfg)?.model.amplitudes()
}

/// (S, log10 q) histograms of ε and δ over all successful runs.
pub fn emit_histograms(manifest: &RunManifest, bins: usize) -> Result<Vec<HistogramCell>> {
    let records = manifest.records();
    let mut cells = histogram(&records, Quality::Epsilon, bins)?;
    cells.extend(histogram(&records, Quality::Delta, bins)?);
    Ok(cells)
}

/// Fixed-point trajectory from a model state, with the ℒ_min reference.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryComparison {
    pub trajectory: Trajectory,
    /// Converged loss of the iteration started from the exact target.
    pub loss_min: f64,
    pub converged: bool,
}

impl TrajectoryComparison {
    /// CSV columns: iter, loss, epsilon, delta, step_norm, loss_min.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iter", "loss", "epsilon", "delta", "step_norm", "loss_min"])?;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        for r in &self.trajectory {
            out.write_record([
                r.iteration.to_string(),
                r.loss.to_string(),
                opt(r.epsilon),
                opt(r.delta),
                r.step_norm.to_string(),
                self.loss_min.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn emit_trajectory_comparison(
    h: &PauliHamiltonian,
    model: &ModelState,
    data: &Dataset,
    cfg: &FixedPointConfig,
) -> Result<TrajectoryComparison> {
    let exact = groundstate(h)?;
    let weighted = data.weighted();
    let start = model.to_statevector()?;
    let reference = Reference {
        hamiltonian: h,
        exact: &exact,
    };
    let run = mle::iterate(&start, &weighted, cfg, Some(reference))?;
    let loss_min = mle::loss_minimum_estimate(&weighted, &exact.state, cfg)?;
    Ok(TrajectoryComparison {
        trajectory: run.trajectory,
        loss_min,
        converged: run.converged,
    })
}

pub fn emit_trajectory_comparison_files(
    hamiltonian_path: impl AsRef<Path>,
    model_path: impl AsRef<Path>,
    data_path: impl AsRef<Path>,
    cfg: &FixedPointConfig,
) -> Result<TrajectoryComparison> {
    emit_trajectory_comparison(
        &load_hamiltonian(hamiltonian_path)?,
        &ModelState::load(model_path)?,
        &Dataset::load(data_path)?,
        cfg,
    )
}

/// Gnuplot script drawing mean quality against S on log-log axes from a
/// summary CSV with columns method, shots, mean, std_error.
pub fn gnuplot_scaling_script(summary_csv: &str, quality: Quality) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale xy\n\
         set xlabel 'mean {q}'\n\
         set ylabel 'S'\n\
         set key top right\n\
         plot for [m in 'rbm rnn wavefunction shadows'] '{f}' \
         using (strcol(1) eq m ? $3 : 1/0):2:4 with xerrorbars title m\n",
        q = quality.as_str(),
        f = summary_csv
    )
}

/// Summary table matching [`gnuplot_scaling_script`].
pub fn write_summary_csv<W: std::io::Write>(
    manifest: &RunManifest,
    quality: Quality,
    w: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "shots", "mean", "std_error", "count"])?;
    for s in manifest.summaries.iter().filter(|s| s.quality == quality) {
        for p in &s.points {
            out.write_record([
                s.method.as_str().to_string(),
                p.shots.to_string(),
                p.mean.to_string(),
                p.std_error.to_string(),
                p.count.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
