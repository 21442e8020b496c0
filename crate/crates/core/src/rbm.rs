//! Complex restricted Boltzmann machine wavefunction.
//!
//! With visible units σ ∈ {0,1}^N and hidden units traced out,
//! ψ̃(σ) = e^{b·σ} Π_j [1 + e^{(Wσ+c)_j}], normalized by enumeration.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::model::{Ansatz, ModelState};
use crate::statevec::StateVector;
use crate::MAX_ENUMERATED_QUBITS;

/// Real parameter count 2(N·N_h + N + N_h).
pub fn param_count(n_visible: usize, n_hidden: usize) -> usize {
    2 * (n_visible * n_hidden + n_visible + n_hidden)
}

/// log(1 + e^z) for complex z, evaluated without overflow for large Re z.
pub fn log1p_exp(z: Complex64) -> Complex64 {
    if z.re > 0.0 {
        z + (Complex64::new(1.0, 0.0) + (-z).exp()).ln()
    } else {
        (Complex64::new(1.0, 0.0) + z.exp()).ln()
    }
}

/// 1 / (1 + e^{−z})
fn logistic(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if z.re >= 0.0 {
        one / (one + (-z).exp())
    } else {
        let e = z.exp();
        e / (one + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbmParams {
    pub n_visible: usize,
    pub n_hidden: usize,
    /// N_h × N, row-major: `weights[j * n_visible + i]` couples hidden j to visible i.
    pub weights: Vec<Complex64>,
    pub visible_bias: Vec<Complex64>,
    pub hidden_bias: Vec<Complex64>,
}

impl RbmParams {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        RbmParams {
            n_visible,
            n_hidden,
            weights: vec![z; n_visible * n_hidden],
            visible_bias: vec![z; n_visible],
            hidden_bias: vec![z; n_hidden],
        }
    }

    /// Independent complex Gaussians with the given standard deviation per
    /// real component.
    pub fn random<R: Rng + ?Sized>(
        n_visible: usize,
        n_hidden: usize,
        std: f64,
        rng: &mut R,
    ) -> Self {
        let normal = Normal::new(0.0, std).expect("valid std");
        let mut draw = |len: usize| -> Vec<Complex64> {
            (0..len)
                .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
                .collect()
        };
        let weights = draw(n_visible * n_hidden);
        let visible_bias = draw(n_visible);
        let hidden_bias = draw(n_hidden);
        RbmParams {
            n_visible,
            n_hidden,
            weights,
            visible_bias,
            hidden_bias,
        }
    }

    /// Default initialization: σ = 0.01 per real component.
    pub fn init<R: Rng + ?Sized>(n_visible: usize, n_hidden: usize, rng: &mut R) -> Self {
        Self::random(n_visible, n_hidden, 0.01, rng)
    }

    pub fn real_parameter_count(&self) -> usize {
        param_count(self.n_visible, self.n_hidden)
    }

    fn theta(&self, sigma: usize, j: usize) -> Complex64 {
        let row = &self.weights[j * self.n_visible..(j + 1) * self.n_visible];
        let mut t = self.hidden_bias[j];
        for (i, w) in row.iter().enumerate() {
            if bits::bit(sigma, i, self.n_visible) == 1 {
                t += w;
            }
        }
        t
    }

    pub(crate) fn log_amplitude_index(&self, sigma: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, b) in self.visible_bias.iter().enumerate() {
            if bits::bit(sigma, i, self.n_visible) == 1 {
                acc += b;
            }
        }
        for j in 0..self.n_hidden {
            acc += log1p_exp(self.theta(sigma, j));
        }
        acc
    }

    /// b·σ + Σ_j log(1 + e^{(Wσ+c)_j})
    pub fn unnormalized_log_amplitude(&self, sigma: &[u8]) -> Result<Complex64> {
        if sigma.len() != self.n_visible {
            return Err(Error::DimensionMismatch {
                expected: self.n_visible,
                got: sigma.len(),
            });
        }
        Ok(self.log_amplitude_index(bits::index_of(sigma)?))
    }

    fn check_cap(&self) -> Result<()> {
        if self.n_visible > MAX_ENUMERATED_QUBITS {
            return Err(Error::QubitCap {
                n: self.n_visible,
                cap: MAX_ENUMERATED_QUBITS,
            });
        }
        Ok(())
    }

    fn log_amplitudes(&self) -> Vec<Complex64> {
        (0..1usize << self.n_visible)
            .map(|s| self.log_amplitude_index(s))
            .collect()
    }

    /// log Σ_σ |ψ̃(σ)|², by enumeration with log-sum-exp.
    pub fn log_partition(&self) -> Result<f64> {
        self.check_cap()?;
        let logs = self.log_amplitudes();
        let m = logs
            .iter()
            .map(|l| 2.0 * l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (2.0 * l.re - m).exp()).sum();
        Ok(m + s.ln())
    }

    pub fn to_statevector(&self) -> Result<StateVector> {
        self.check_cap()?;
        let logs = self.log_amplitudes();
        let m = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        StateVector::from_unnormalized(logs.iter().map(|l| (l - m).exp()).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn complex_params(&self) -> impl Iterator<Item = &Complex64> {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
    }

    fn complex_params_mut(&mut self) -> impl Iterator<Item = &mut Complex64> {
        self.weights
            .iter_mut()
            .chain(self.visible_bias.iter_mut())
            .chain(self.hidden_bias.iter_mut())
    }
}

impl Ansatz for RbmParams {
    fn n_qubits(&self) -> usize {
        self.n_visible
    }

    fn num_params(&self) -> usize {
        self.real_parameter_count()
    }

    /// Layout: W (row-major), b, c; each complex entry as (re, im).
    fn params(&self) -> Vec<f64> {
        self.complex_params().flat_map(|z| [z.re, z.im]).collect()
    }

    fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "parameter length");
        for (z, pair) in self.complex_params_mut().zip(flat.chunks_exact(2)) {
            *z = Complex64::new(pair[0], pair[1]);
        }
    }

    fn amplitudes(&self) -> Result<StateVector> {
        self.to_statevector()
    }

    fn pullback(&self, adjoint: &[Complex64]) -> Vec<f64> {
        let (n, nh) = (self.n_visible, self.n_hidden);
        // complex accumulators Σ_τ G(τ) ∂logψ/∂z for each complex parameter z
        let mut dw = vec![Complex64::new(0.0, 0.0); n * nh];
        let mut db = vec![Complex64::new(0.0, 0.0); n];
        let mut dc = vec![Complex64::new(0.0, 0.0); nh];
        let mut on = vec![0u8; n];
        for (sigma, &g) in adjoint.iter().enumerate() {
            if g == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in on.iter_mut().enumerate() {
                *o = bits::bit(sigma, i, n);
            }
            for i in 0..n {
                if on[i] == 1 {
                    db[i] += g;
                }
            }
            for j in 0..nh {
                let gs = g * logistic(self.theta(sigma, j));
                dc[j] += gs;
                for i in 0..n {
                    if on[i] == 1 {
                        dw[j * n + i] += gs;
                    }
                }
            }
        }
        // ∂/∂Re z = Re(acc), ∂/∂Im z = Re(i·acc) = −Im(acc)
        dw.iter()
            .chain(&db)
            .chain(&dc)
            .flat_map(|a| [a.re, -a.im])
            .collect()
    }

    fn to_model_state(&self) -> ModelState {
        ModelState::Rbm(self.clone())
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RbmCheckpoint {
    n_visible: usize,
    n_hidden: usize,
    weights_re: Vec<f64>,
    weights_im: Vec<f64>,
    visible_bias_re: Vec<f64>,
    visible_bias_im: Vec<f64>,
    hidden_bias_re: Vec<f64>,
    hidden_bias_im: Vec<f64>,
}

fn split(v: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (
        v.iter().map(|z| z.re).collect(),
        v.iter().map(|z| z.im).collect(),
    )
}

fn join(re: &[f64], im: &[f64], len: usize, what: &str) -> Result<Vec<Complex64>> {
    if re.len() != len || im.len() != len {
        return Err(Error::Format(format!("{what}: expected {len} entries")));
    }
    Ok(re
        .iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect())
}

impl From<&RbmParams> for RbmCheckpoint {
    fn from(p: &RbmParams) -> Self {
        let (weights_re, weights_im) = split(&p.weights);
        let (visible_bias_re, visible_bias_im) = split(&p.visible_bias);
        let (hidden_bias_re, hidden_bias_im) = split(&p.hidden_bias);
        RbmCheckpoint {
            n_visible: p.n_visible,
            n_hidden: p.n_hidden,
            weights_re,
            weights_im,
            visible_bias_re,
            visible_bias_im,
            hidden_bias_re,
            hidden_bias_im,
        }
    }
}

impl TryFrom<RbmCheckpoint> for RbmParams {
    type Error = Error;

    fn try_from(c: RbmCheckpoint) -> Result<Self> {
        let p = RbmParams {
            n_visible: c.n_visible,
            n_hidden: c.n_hidden,
            weights: join(
                &c.weights_re,
                &c.weights_im,
                c.n_visible * c.n_hidden,
                "weights",
            )?,
            visible_bias: join(
                &c.visible_bias_re,
                &c.visible_bias_im,
                c.n_visible,
                "visible_bias",
            )?,
            hidden_bias: join(
                &c.hidden_bias_re,
                &c.hidden_bias_im,
                c.n_hidden,
                "hidden_bias",
            )?,
        };
        if !p.is_finite() {
            return Err(Error::Format("non-finite RBM parameter".into()));
        }
        Ok(p)
    }
}
