use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nqs_core::analysis::{self, Method, Quality};
use nqs_core::harness::{self, SweepPlan, WORKERS_ENV};
use nqs_core::mle::{self, FixedPointConfig, Reference};
use nqs_core::model::{Ansatz, ModelState};
use nqs_core::pauli::{group_bases, load_hamiltonian, PauliHamiltonian};
use nqs_core::rbm::RbmParams;
use nqs_core::rnn::RnnParams;
use nqs_core::sampler::{sample_dataset, Dataset};
use nqs_core::shadows::{stream_energy, EstimateOptions};
use nqs_core::statevec::{groundstate, load_state, save_state, GroundstateResult};
use nqs_core::train::{self, TrainConfig};
use nqs_core::{rng, Error};

#[derive(Parser)]
#[command(
    name = "nqs",
    version,
    about = "Groundstate reconstruction from simulated measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print qubit count, term count and measurement bases.
    HamInfo { hamiltonian: PathBuf },
    /// Exact groundstate energy and, optionally, its state vector.
    Ground {
        hamiltonian: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a measurement dataset from the exact groundstate.
    Sample {
        hamiltonian: PathBuf,
        #[arg(long)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a restricted Boltzmann machine on a dataset.
    TrainRbm(TrainArgs),
    /// Train a recurrent network on a dataset.
    TrainRnn(TrainArgs),
    /// Fixed-point maximum-likelihood tomography of the full wavefunction.
    Mle {
        hamiltonian: PathBuf,
        data: PathBuf,
        /// `exact`, a model checkpoint (.json) or a state file.
        #[arg(long, default_value = "exact")]
        start: String,
        #[arg(long, default_value_t = 10_000)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        traj: Option<PathBuf>,
    },
    /// Classical-shadow energy estimate.
    Shadows {
        hamiltonian: PathBuf,
        #[arg(long)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Groups for the median-of-means diagnostic.
        #[arg(long)]
        mom_groups: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power-law fit of mean quality against shot count.
    Fit {
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = QualityArg::Epsilon)]
        quality: QualityArg,
        /// Restrict to one method; all methods present otherwise.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep plan.
    Sweep {
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Per-(method, S) summary table for plotting.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Gnuplot script reading the summary table.
        #[arg(long, requires = "summary")]
        gnuplot: Option<PathBuf>,
    },
    /// Binned (S, ε) and (S, δ) counts from a sweep manifest.
    Histograms {
        manifest: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fixed-point trajectory started from a trained model.
    Trajectory {
        hamiltonian: PathBuf,
        model: PathBuf,
        data: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum QualityArg {
    Epsilon,
    Delta,
    GError,
}

impl From<QualityArg> for Quality {
    fn from(q: QualityArg) -> Self {
        match q {
            QualityArg::Epsilon => Quality::Epsilon,
            QualityArg::Delta => Quality::Delta,
            QualityArg::GError => Quality::Generalization,
        }
    }
}

#[derive(clap::Args)]
struct TrainArgs {
    hamiltonian: PathBuf,
    data: PathBuf,
    #[arg(long)]
    nh: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    checkpoint_every: usize,
    /// Check the gradient against finite differences before training.
    #[arg(long)]
    gradient_check: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    history: Option<PathBuf>,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn ham(path: &Path) -> Result<PauliHamiltonian> {
    load_hamiltonian(path).with_context(|| format!("loading {}", path.display()))
}

fn dataset(path: &Path) -> Result<Dataset> {
    Dataset::load(path).with_context(|| format!("loading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?
        }
        None => {
            let _ = writeln!(std::io::stdout(), "{text}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::HamInfo { hamiltonian } => ham_info(&ham(&hamiltonian)?),
        Command::Ground { hamiltonian, out } => {
            let h = ham(&hamiltonian)?;
            let g = groundstate(&h)?;
            println!("energy {:.15}", g.energy);
            println!("residual {:.3e}", g.residual_norm);
            if let Some(p) = out {
                save_state(&g.state, &p)?;
            }
            Ok(())
        }
        Command::Sample {
            hamiltonian,
            shots,
            seed,
            out,
        } => {
            let h = ham(&hamiltonian)?;
            let g = groundstate(&h)?;
            let d = sample_dataset(&g.state, &group_bases(&h), shots, seed)?;
            d.save(&out)?;
            println!(
                "{} shots over {} bases, {} distinct outcomes",
                shots,
                d.bases.len(),
                d.num_entries()
            );
            Ok(())
        }
        Command::TrainRbm(a) => train_model(&a, |n, seed| {
            RbmParams::init(n, a.nh, &mut rng::stream(seed, 0))
        }),
        Command::TrainRnn(a) => train_model(&a, |n, seed| {
            RnnParams::init(n, a.nh, &mut rng::stream(seed, 0))
        }),
        Command::Mle {
            hamiltonian,
            data,
            start,
            max_iterations,
            tol,
            out,
            traj,
        } => {
            let h = ham(&hamiltonian)?;
            let exact = groundstate(&h)?;
            let d = dataset(&data)?;
            let start_state = match start.as_str() {
                "exact" => exact.state.clone(),
                p if p.ends_with(".json") => ModelState::load(p)?.to_statevector()?,
                p => load_state(p)?,
            };
            let cfg = FixedPointConfig {
                max_iterations,
                convergence_tol: tol,
            };
            let reference = Reference {
                hamiltonian: &h,
                exact: &exact,
            };
            let r = mle::iterate(&start_state, &d.weighted(), &cfg, Some(reference))?;
            let last = r
                .trajectory
                .last()
                .expect("trajectory has the start record");
            println!(
                "iterations {} converged {} loss {:.12} epsilon {:.6e} delta {:.6e}",
                r.iterations,
                r.converged,
                last.loss,
                last.epsilon.unwrap_or(f64::NAN),
                last.delta.unwrap_or(f64::NAN)
            );
            if let Some(p) = out {
                save_state(&r.state, &p)?;
            }
            if let Some(p) = traj {
                let cmp = harness::TrajectoryComparison {
                    trajectory: r.trajectory,
                    loss_min: f64::NAN,
                    converged: r.converged,
                };
                write_trajectory(&cmp, &p, false)?;
            }
            Ok(())
        }
        Command::Shadows {
            hamiltonian,
            shots,
            seed,
            mom_groups,
            out,
        } => {
            let h = ham(&hamiltonian)?;
            let g = groundstate(&h)?;
            let opts = EstimateOptions {
                per_term: true,
                median_of_means_groups: mom_groups,
            };
            let est = stream_energy(&h, &g.state, shots, seed, &opts)?;
            let mut v = serde_json::to_value(&est)?;
            v["seed"] = seed.into();
            v["exact_energy"] = g.energy.into();
            v["epsilon"] = analysis::shadow_epsilon(est.energy, g.energy).into();
            write_json(out.as_deref(), &v)
        }
        Command::Fit {
            records,
            quality,
            method,
            out,
        } => {
            let recs = analysis::load_records(&records)?;
            let quality: Quality = quality.into();
            let methods: Vec<Method> = match method {
                Some(m) => vec![m.parse()?],
                None => {
                    let mut m: Vec<Method> = recs.iter().map(|r| r.method).collect();
                    m.sort();
                    m.dedup();
                    m
                }
            };
            let mut fits = Vec::new();
            for m in methods {
                let points = analysis::summarize(&recs, m, quality);
                if points.is_empty() {
                    continue;
                }
                let fit = analysis::fit_summary(&points)
                    .with_context(|| format!("fitting {m} {}", quality.as_str()))?;
                eprintln!("{m}: slope {:.4} R² {:.5}", fit.slope, fit.r_squared);
                fits.push(serde_json::json!({
                    "method": m,
                    "quality": quality,
                    "averaging": "mean",
                    "points": points,
                    "fit": fit,
                }));
            }
            if fits.is_empty() {
                bail!("no records carry {}", quality.as_str());
            }
            write_json(out.as_deref(), &serde_json::Value::Array(fits))
        }
        Command::Sweep {
            plan,
            out,
            records,
            workers,
            summary,
            gnuplot,
        } => {
            let mut p =
                SweepPlan::load(&plan).with_context(|| format!("loading {}", plan.display()))?;
            let hpath = p
                .hamiltonian_path
                .clone()
                .context("plan has no hamiltonian_path")?;
            let hpath = if hpath.is_relative() {
                plan.parent().unwrap_or(Path::new(".")).join(hpath)
            } else {
                hpath
            };
            if workers.is_some() {
                p.workers = workers;
            }
            let m = harness::run_sweep_with(&p, &ham(&hpath)?)?;
            m.save(&out)?;
            if let Some(r) = records {
                analysis::save_records(&m.records(), r)?;
            }
            if let Some(s) = &summary {
                harness::write_summary_csv(&m, Quality::Epsilon, create(s)?)?;
                if let Some(g) = gnuplot {
                    let name = s
                        .file_name()
                        .map(|f| f.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    std::fs::write(g, harness::gnuplot_scaling_script(&name, Quality::Epsilon))?;
                }
            }
            for s in &m.summaries {
                if let Some(f) = &s.fit {
                    println!(
                        "{:<13}{:<9} slope {:>8.4}  R² {:.5}",
                        s.method.as_str(),
                        s.quality.as_str(),
                        f.slope,
                        f.r_squared
                    );
                }
            }
            let failed = m.failures().count();
            if failed > 0 {
                eprintln!("{failed} runs failed; see manifest");
            }
            Ok(())
        }
        Command::Histograms {
            manifest,
            bins,
            out,
        } => {
            let m = harness::RunManifest::load(&manifest)?;
            let cells = harness::emit_histograms(&m, bins)?;
            analysis::write_histogram(&cells, create(&out)?)?;
            Ok(())
        }
        Command::Trajectory {
            hamiltonian,
            model,
            data,
            max_iterations,
            out,
        } => {
            let cfg = FixedPointConfig {
                max_iterations,
                ..FixedPointConfig::default()
            };
            let cmp = harness::emit_trajectory_comparison_files(&hamiltonian, &model, &data, &cfg)?;
            write_trajectory(&cmp, &out, true)
        }
    }
}

fn write_trajectory(
    cmp: &harness::TrajectoryComparison,
    path: &Path,
    with_min: bool,
) -> Result<()> {
    if with_min {
        cmp.write_csv(create(path)?)?;
        return Ok(());
    }
    let mut w = create(path)?;
    writeln!(w, "iter,loss,epsilon,delta,step_norm")?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in &cmp.trajectory {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.iteration,
            r.loss,
            opt(r.epsilon),
            opt(r.delta),
            r.step_norm
        )?;
    }
    Ok(())
}

fn ham_info(h: &PauliHamiltonian) -> Result<()> {
    let bases = group_bases(h);
    println!("name          {}", h.name);
    println!("qubits        {}", h.n_qubits);
    println!(
        "pauli terms   {}",
        h.terms.len() + usize::from(h.identity_offset != 0.0)
    );
    println!("bases         {}", bases.len());
    println!();
    println!(
        "{:<4} {:<width$} terms",
        "k",
        "basis",
        width = h.n_qubits.max(5)
    );
    for (k, b) in bases.iter().enumerate() {
        println!(
            "{:<4} {:<width$} {}",
            k,
            b.label(),
            b.covered_terms.len(),
            width = h.n_qubits.max(5)
        );
    }
    Ok(())
}

fn train_model<A, F>(a: &TrainArgs, init: F) -> Result<()>
where
    A: Ansatz,
    F: FnOnce(usize, u64) -> A,
{
    let h = ham(&a.hamiltonian)?;
    let exact = groundstate(&h)?;
    let d = dataset(&a.data)?;
    if d.n_qubits != h.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: h.n_qubits,
            got: d.n_qubits,
        }
        .into());
    }
    let cfg = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        seed: a.seed,
        checkpoint_every: a.checkpoint_every,
        gradient_check: a.gradient_check,
        ..TrainConfig::default()
    };
    let model = init(h.n_qubits, a.seed);
    let mut rows: Vec<String> = Vec::new();
    let mut observe_error = None;
    let result = train::fit_with(
        model,
        &d.weighted(),
        &cfg,
        |epoch, m, loss| match checkpoint_row(epoch, m, loss, &h, &exact) {
            Ok(r) => rows.push(r),
            Err(e) => {
                observe_error.get_or_insert(e);
            }
        },
    );
    if let Some(p) = &a.history {
        let mut w = create(p)?;
        writeln!(w, "epoch,loss,epsilon,delta")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
    }
    if let Some(e) = observe_error {
        return Err(e);
    }
    match result {
        Ok(fit) => {
            let final_state = fit.model.amplitudes()?;
            fit.model.to_model_state().save(&a.out)?;
            println!(
                "final loss {:.12} epsilon {:.6e} delta {:.6e}",
                fit.history.last().copied().unwrap_or(f64::NAN),
                analysis::epsilon(&final_state, &h, &exact)?,
                analysis::delta(&final_state, &exact.state)?
            );
            Ok(())
        }
        Err(Error::NonFiniteLoss { epoch, last_good }) => {
            last_good.save(&a.out)?;
            bail!(
                "loss became non-finite at epoch {epoch}; last finite model written to {}",
                a.out.display()
            )
        }
        Err(e) => Err(e.into()),
    }
}

fn checkpoint_row<A: Ansatz>(
    epoch: usize,
    m: &A,
    loss: f64,
    h: &PauliHamiltonian,
    exact: &GroundstateResult,
) -> Result<String> {
    let s = m.amplitudes()?;
    Ok(format!(
        "{},{},{},{}",
        epoch,
        loss,
        analysis::epsilon(&s, h, exact)?,
        analysis::delta(&s, &exact.state)?
    ))
}
