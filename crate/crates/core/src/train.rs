//! Multi-basis cross-entropy training of wavefunction models.
//!
//! The loss is ℒ = −(1/|𝒟|) Σ_k Σ_σ n_{k,σ} log|⟨σ|R_k†|φ⟩|², evaluated
//! from histogram weights on the enumerated state. Gradients go through a
//! state-level adjoint G(τ) = 2|φ(τ)|² − (2/|𝒟|) c(τ) φ(τ), with
//! c = Σ_k (R_k†)ᵀ (n_k / R_k†φ), which each model pulls back onto its own
//! parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::format_bits;
use crate::error::{Error, Result};
use crate::model::Ansatz;
use crate::sampler::WeightedData;
use crate::statevec::{rotate_in_place, Rotation, StateVector};

/// |amplitude|² below this is treated as a zero-probability outcome.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    /// Nats.
    pub loss: f64,
    /// Cross entropy of each basis histogram on its own, normalized by the
    /// basis weight. `loss` is the weight-averaged sum of these.
    pub per_basis_loss: Vec<f64>,
    pub epoch: usize,
}

fn check_data(state: &StateVector, data: &WeightedData) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if state.n_qubits() != data.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: data.n_qubits,
            got: state.n_qubits(),
        });
    }
    Ok(())
}

fn evaluate(
    state: &StateVector,
    data: &WeightedData,
    want_adjoint: bool,
) -> Result<(LossReport, Option<Vec<Complex64>>)> {
    check_data(state, data)?;
    let phi = state.amplitudes();
    let dim = phi.len();
    let mut pulled = vec![Complex64::new(0.0, 0.0); if want_adjoint { dim } else { 0 }];
    let mut per_basis_loss = Vec::with_capacity(data.bases.len());
    let mut total_loss = 0.0;
    let mut covector = vec![Complex64::new(0.0, 0.0); dim];
    for (k, (basis, entries)) in data.bases.iter().zip(&data.entries).enumerate() {
        let mut rotated = phi.to_vec();
        rotate_in_place(&mut rotated, &basis.ops, Rotation::Dagger);
        let mut basis_loss = 0.0;
        let mut basis_weight = 0.0;
        if want_adjoint {
            covector
                .iter_mut()
                .for_each(|c| *c = Complex64::new(0.0, 0.0));
        }
        for &(sigma, w) in entries {
            let a = rotated[sigma];
            let p = a.norm_sqr();
            if p < PROBABILITY_FLOOR {
                return Err(Error::ZeroProbability {
                    basis: k,
                    sigma: format_bits(sigma, data.n_qubits),
                });
            }
            basis_loss -= w * p.ln();
            basis_weight += w;
            if want_adjoint {
                covector[sigma] += w / a;
            }
        }
        total_loss += basis_loss;
        per_basis_loss.push(if basis_weight > 0.0 {
            basis_loss / basis_weight
        } else {
            0.0
        });
        if want_adjoint {
            rotate_in_place(&mut covector, &basis.ops, Rotation::DaggerTranspose);
            pulled.iter_mut().zip(&covector).for_each(|(p, c)| *p += c);
        }
    }
    let report = LossReport {
        loss: total_loss / data.total,
        per_basis_loss,
        epoch: 0,
    };
    let adjoint = want_adjoint.then(|| {
        let scale = 2.0 / data.total;
        phi.iter()
            .zip(&pulled)
            .map(|(f, c)| 2.0 * f.norm_sqr() - scale * c * f)
            .collect()
    });
    Ok((report, adjoint))
}

/// Cross-entropy loss of a normalized state against weighted data.
pub fn loss(state: &StateVector, data: &WeightedData) -> Result<LossReport> {
    Ok(evaluate(state, data, false)?.0)
}

pub fn model_loss<A: Ansatz>(model: &A, data: &WeightedData) -> Result<LossReport> {
    loss(&model.amplitudes()?, data)
}

/// ∂ℒ/∂ψ̃ expressed per configuration: the gradient of a model is
/// Re Σ_τ G(τ) ∂log ψ̃(τ)/∂λ.
pub fn state_adjoint(
    state: &StateVector,
    data: &WeightedData,
) -> Result<(LossReport, Vec<Complex64>)> {
    let (r, g) = evaluate(state, data, true)?;
    Ok((r, g.expect("adjoint requested")))
}

pub fn loss_and_gradient<A: Ansatz>(
    model: &A,
    data: &WeightedData,
) -> Result<(LossReport, Vec<f64>)> {
    let (report, adjoint) = state_adjoint(&model.amplitudes()?, data)?;
    Ok((report, model.pullback(&adjoint)))
}

/// ∂ℒ/∂λ over all real parameters of the model.
pub fn gradient<A: Ansatz>(model: &A, data: &WeightedData) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(model, data)?.1)
}

/// Central finite differences of the loss, for the optional gradient check.
pub fn finite_difference_gradient<A: Ansatz>(
    model: &A,
    data: &WeightedData,
    step: f64,
) -> Result<Vec<f64>> {
    let base = model.params();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut shifted = base.clone();
    for i in 0..base.len() {
        shifted[i] = base[i] + step;
        probe.set_params(&shifted);
        let up = model_loss(&probe, data)?.loss;
        shifted[i] = base[i] - step;
        probe.set_params(&shifted);
        let down = model_loss(&probe, data)?.loss;
        shifted[i] = base[i];
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Adam,
    /// Plain λ ← λ − η∇ℒ.
    GradientDescent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Seeds parameter initialization.
    pub seed: u64,
    /// Compare the analytic gradient with finite differences before the
    /// first step and abort on disagreement.
    pub gradient_check: bool,
    pub checkpoint_every: usize,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 1000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            gradient_check: false,
            checkpoint_every: 100,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(
                "learning_rate must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::InvalidArgument(
                "Adam betas must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Adam with bias-corrected moments.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult<A> {
    pub model: A,
    /// Loss before each update, one entry per epoch.
    pub history: Vec<f64>,
}

pub fn fit<A: Ansatz>(init: A, data: &WeightedData, cfg: &TrainConfig) -> Result<FitResult<A>> {
    fit_with(init, data, cfg, |_, _, _| {})
}

/// Full-batch training. `observer(epoch, model, loss)` runs on the
/// pre-update model every `checkpoint_every` epochs and on the last epoch.
pub fn fit_with<A, F>(
    init: A,
    data: &WeightedData,
    cfg: &TrainConfig,
    mut observer: F,
) -> Result<FitResult<A>>
where
    A: Ansatz,
    F: FnMut(usize, &A, f64),
{
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut model = init;
    if cfg.gradient_check {
        let analytic = gradient(&model, data)?;
        let numeric = finite_difference_gradient(&model, data, 1e-5)?;
        for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
            if (a - n).abs() > 1e-4 * a.abs().max(n.abs()) + 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "gradient check failed at parameter {i}: analytic {a}, numeric {n}"
                )));
            }
        }
    }
    let mut params = model.params();
    let mut adam = Adam::new(
        params.len(),
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_epsilon,
    );
    let mut history = Vec::with_capacity(cfg.epochs);
    let every = cfg.checkpoint_every.max(1);
    for epoch in 0..cfg.epochs {
        let evaluated = loss_and_gradient(&model, data);
        let (report, grad) = match evaluated {
            Ok(x) => x,
            Err(Error::ZeroProbability { .. }) => (
                LossReport {
                    loss: f64::INFINITY,
                    per_basis_loss: vec![],
                    epoch,
                },
                vec![],
            ),
            Err(e) => return Err(e),
        };
        if !report.loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch,
                last_good: Box::new(model.to_model_state()),
            });
        }
        if epoch % every == 0 || epoch + 1 == cfg.epochs {
            observer(epoch, &model, report.loss);
        }
        history.push(report.loss);
        match cfg.optimizer {
            Optimizer::Adam => adam.step(&mut params, &grad),
            Optimizer::GradientDescent => params
                .iter_mut()
                .zip(&grad)
                .for_each(|(p, g)| *p -= cfg.learning_rate * g),
        }
        model.set_params(&params);
    }
    Ok(FitResult { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::MeasurementBasis;
    use crate::rbm::RbmParams;
    use crate::rng;
    use crate::sampler::{sample_dataset, WeightedData};

    #[test]
    fn uniform_model_single_basis() {
        let data = sample_dataset(
            &StateVector::basis_state(3, 5),
            &[MeasurementBasis::parse("ZZZ").unwrap()],
            100,
            0,
        )
        .unwrap()
        .weighted();
        let r = model_loss(&RbmParams::zeros(3, 2), &data).unwrap();
        assert!((r.loss - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn empty_data_is_an_error() {
        let b = MeasurementBasis::parse("Z").unwrap();
        let empty = WeightedData::from_shots(1, &[b], &[]).unwrap();
        assert!(matches!(
            gradient(&RbmParams::zeros(1, 1), &empty),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn zero_probability_is_reported() {
        let b = MeasurementBasis::parse("Z").unwrap();
        let data = WeightedData::from_shots(1, &[b], &[(0, 1)]).unwrap();
        let err = loss(&StateVector::basis_state(1, 0), &data).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability { basis: 0, ref sigma } if sigma == "1"));
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut adam = Adam::new(2, 0.1, 0.9, 0.999, 1e-8);
        let mut x = vec![3.0, -2.0];
        for _ in 0..2000 {
            let g = vec![2.0 * x[0], 2.0 * x[1]];
            adam.step(&mut x, &g);
        }
        assert!(x[0].abs() < 1e-3 && x[1].abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn deterministic_histories() {
        let mut g = rng::stream(1, 0);
        let target = StateVector::random(2, &mut g);
        let bases = ["ZZ", "XX", "YZ"].map(|s| MeasurementBasis::parse(s).unwrap());
        let data = sample_dataset(&target, &bases, 500, 3).unwrap().weighted();
        let init = RbmParams::init(2, 2, &mut rng::stream(4, 0));
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e-2,
            ..Default::default()
        };
        let a = fit(init.clone(), &data, &cfg).unwrap();
        let b = fit(init, &data, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.history.len(), 50);
    }
}
