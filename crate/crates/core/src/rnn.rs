//! Complex recurrent neural network wavefunction.
//!
//! ψ(σ) = Π_j e^{2πiθ_j(σ)} √p_j(σ) with a single tanh recurrence
//! h_j = tanh(M h_{j−1} + p σ_{j−1} + q), h_0 = 0, σ_0 = 0. The conditionals
//! p_j are logistic in w·h_j + c, so the state is normalized by construction
//! and can be sampled exactly bit by bit. Phases are left unbounded.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::model::{Ansatz, ModelState};
use crate::rng;
use crate::statevec::StateVector;
use crate::MAX_ENUMERATED_QUBITS;

/// Real parameter count N_h² + 5N_h + 3.
pub fn param_count(n_hidden: usize) -> usize {
    n_hidden * n_hidden + 5 * n_hidden + 3
}

/// log(1 + e^x)
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnnParams {
    /// Length of the configurations this network is evaluated on.
    pub n_qubits: usize,
    pub n_hidden: usize,
    /// M, N_h × N_h row-major.
    pub recurrent: Vec<f64>,
    /// p, weight of the previous bit in the recurrence.
    pub input: Vec<f64>,
    /// q
    pub hidden_bias: Vec<f64>,
    /// u, phase contribution switched on by σ_j = 1.
    pub phase_on: Vec<f64>,
    /// v, phase contribution independent of σ_j.
    pub phase_base: Vec<f64>,
    /// w, conditional logit weights.
    pub logit: Vec<f64>,
    /// a
    pub phase_on_bias: f64,
    /// b
    pub phase_base_bias: f64,
    /// c
    pub logit_bias: f64,
}

/// Per-step quantities of one forward pass.
struct Forward {
    /// h_0 .. h_N, each of length N_h (h_0 = 0).
    hidden: Vec<Vec<f64>>,
    /// w·h_j + c for j = 1..N
    logits: Vec<f64>,
}

impl RnnParams {
    pub fn zeros(n_qubits: usize, n_hidden: usize) -> Self {
        RnnParams {
            n_qubits,
            n_hidden,
            recurrent: vec![0.0; n_hidden * n_hidden],
            input: vec![0.0; n_hidden],
            hidden_bias: vec![0.0; n_hidden],
            phase_on: vec![0.0; n_hidden],
            phase_base: vec![0.0; n_hidden],
            logit: vec![0.0; n_hidden],
            phase_on_bias: 0.0,
            phase_base_bias: 0.0,
            logit_bias: 0.0,
        }
    }

    /// Uniform in ±1/√N_h for M, w, u, v, p; zeros for q and the scalars.
    pub fn init<R: Rng + ?Sized>(n_qubits: usize, n_hidden: usize, rng: &mut R) -> Self {
        Self::random(
            n_qubits,
            n_hidden,
            (n_hidden as f64).sqrt().recip(),
            false,
            rng,
        )
    }

    /// Uniform in ±scale for the vector/matrix parameters; with
    /// `all_params` set, q and the scalars are drawn too.
    pub fn random<R: Rng + ?Sized>(
        n_qubits: usize,
        n_hidden: usize,
        scale: f64,
        all_params: bool,
        rng: &mut R,
    ) -> Self {
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.random_range(-scale..=scale)).collect()
        };
        let mut p = RnnParams {
            n_qubits,
            n_hidden,
            recurrent: draw(n_hidden * n_hidden),
            input: draw(n_hidden),
            hidden_bias: vec![0.0; n_hidden],
            phase_on: draw(n_hidden),
            phase_base: draw(n_hidden),
            logit: draw(n_hidden),
            phase_on_bias: 0.0,
            phase_base_bias: 0.0,
            logit_bias: 0.0,
        };
        if all_params {
            p.hidden_bias = draw(n_hidden);
            let s = draw(3);
            p.phase_on_bias = s[0];
            p.phase_base_bias = s[1];
            p.logit_bias = s[2];
        }
        p
    }

    pub fn real_parameter_count(&self) -> usize {
        param_count(self.n_hidden)
    }

    fn step(&self, prev: &[f64], prev_bit: u8) -> Vec<f64> {
        let nh = self.n_hidden;
        (0..nh)
            .map(|r| {
                let row = &self.recurrent[r * nh..(r + 1) * nh];
                let mut x = self.hidden_bias[r] + self.input[r] * prev_bit as f64;
                x += row.iter().zip(prev).map(|(m, h)| m * h).sum::<f64>();
                x.tanh()
            })
            .collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn logit_of(&self, h: &[f64]) -> f64 {
        Self::dot(&self.logit, h) + self.logit_bias
    }

    fn phase_of(&self, h: &[f64], bit: u8) -> f64 {
        (Self::dot(&self.phase_on, h) + self.phase_on_bias) * bit as f64
            + Self::dot(&self.phase_base, h)
            + self.phase_base_bias
    }

    fn forward(&self, sigma: &[u8]) -> Forward {
        let mut hidden = Vec::with_capacity(sigma.len() + 1);
        hidden.push(vec![0.0; self.n_hidden]);
        let mut logits = Vec::with_capacity(sigma.len());
        let mut prev_bit = 0u8;
        for &s in sigma {
            let h = self.step(hidden.last().unwrap(), prev_bit);
            logits.push(self.logit_of(&h));
            hidden.push(h);
            prev_bit = s;
        }
        Forward { hidden, logits }
    }

    fn check_sigma(&self, sigma: &[u8]) -> Result<()> {
        if sigma.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: sigma.len(),
            });
        }
        if sigma.iter().any(|&b| b > 1) {
            return Err(Error::InvalidBitstring(format!("{sigma:?}")));
        }
        Ok(())
    }

    /// h_1 .. h_N for a configuration.
    pub fn hidden_states(&self, sigma: &[u8]) -> Result<Vec<Vec<f64>>> {
        self.check_sigma(sigma)?;
        let mut f = self.forward(sigma);
        f.hidden.remove(0);
        Ok(f.hidden)
    }

    fn log_amplitude_unchecked(&self, sigma: &[u8]) -> Complex64 {
        let f = self.forward(sigma);
        let mut re = 0.0;
        let mut theta = 0.0;
        for (j, &s) in sigma.iter().enumerate() {
            let z = f.logits[j];
            // log p_j = s z − log(1 + e^z)
            re += 0.5 * (s as f64 * z - softplus(z));
            theta += self.phase_of(&f.hidden[j + 1], s);
        }
        Complex64::new(re, 2.0 * PI * theta)
    }

    /// Σ_j [2πiθ_j(σ) + ½ log p_j(σ)]
    pub fn log_amplitude(&self, sigma: &[u8]) -> Result<Complex64> {
        self.check_sigma(sigma)?;
        Ok(self.log_amplitude_unchecked(sigma))
    }

    /// Exact samples from |ψ|², drawn one bit at a time from the
    /// conditionals. Returned as basis indices.
    pub fn autoregressive_sample(&self, count: usize, seed: u64) -> Vec<usize> {
        let mut g = rng::stream(seed, 0);
        (0..count)
            .map(|_| {
                let mut h = vec![0.0; self.n_hidden];
                let mut prev = 0u8;
                let mut index = 0usize;
                for _ in 0..self.n_qubits {
                    h = self.step(&h, prev);
                    let p1 = sigmoid(self.logit_of(&h));
                    let bit = u8::from(g.random::<f64>() < p1);
                    index = (index << 1) | bit as usize;
                    prev = bit;
                }
                index
            })
            .collect()
    }

    pub fn to_statevector(&self) -> Result<StateVector> {
        if self.n_qubits > MAX_ENUMERATED_QUBITS {
            return Err(Error::QubitCap {
                n: self.n_qubits,
                cap: MAX_ENUMERATED_QUBITS,
            });
        }
        let amps: Vec<Complex64> = (0..1usize << self.n_qubits)
            .map(|s| {
                self.log_amplitude_unchecked(&bits::unpack(s, self.n_qubits))
                    .exp()
            })
            .collect();
        // normalized by construction; from_unnormalized only guards rounding
        StateVector::from_unnormalized(amps)
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|x| x.is_finite())
    }

    /// Backpropagation through time of
    /// J = g_re·(½ Σ log p_j) − 2π g_im·(Σ θ_j) into `grad`.
    fn backprop(&self, sigma: &[u8], g_re: f64, g_im: f64, grad: &mut RnnParams) {
        let nh = self.n_hidden;
        let f = self.forward(sigma);
        let d_theta = -2.0 * PI * g_im;
        let mut carry = vec![0.0; nh]; // Mᵀ dpre_{j+1}
        for j in (0..sigma.len()).rev() {
            let s = sigma[j] as f64;
            let h = &f.hidden[j + 1];
            let h_prev = &f.hidden[j];
            let prev_bit = if j == 0 { 0.0 } else { sigma[j - 1] as f64 };
            let dz = 0.5 * g_re * (s - sigmoid(f.logits[j]));
            grad.logit_bias += dz;
            grad.phase_on_bias += d_theta * s;
            grad.phase_base_bias += d_theta;
            let mut dpre = vec![0.0; nh];
            for r in 0..nh {
                grad.logit[r] += dz * h[r];
                grad.phase_on[r] += d_theta * s * h[r];
                grad.phase_base[r] += d_theta * h[r];
                let dh = dz * self.logit[r]
                    + d_theta * (s * self.phase_on[r] + self.phase_base[r])
                    + carry[r];
                dpre[r] = dh * (1.0 - h[r] * h[r]);
            }
            for (r, &dp) in dpre.iter().enumerate() {
                grad.hidden_bias[r] += dp;
                grad.input[r] += dp * prev_bit;
                for (c, &hp) in h_prev.iter().enumerate() {
                    grad.recurrent[r * nh + c] += dp * hp;
                }
            }
            for (c, slot) in carry.iter_mut().enumerate() {
                *slot = (0..nh).map(|r| self.recurrent[r * nh + c] * dpre[r]).sum();
            }
        }
    }
}

impl Ansatz for RnnParams {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn num_params(&self) -> usize {
        self.real_parameter_count()
    }

    /// Layout: M (row-major), p, q, u, v, w, a, b, c.
    fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend_from_slice(&self.recurrent);
        v.extend_from_slice(&self.input);
        v.extend_from_slice(&self.hidden_bias);
        v.extend_from_slice(&self.phase_on);
        v.extend_from_slice(&self.phase_base);
        v.extend_from_slice(&self.logit);
        v.extend([self.phase_on_bias, self.phase_base_bias, self.logit_bias]);
        v
    }

    fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "parameter length");
        let nh = self.n_hidden;
        let (m, rest) = flat.split_at(nh * nh);
        self.recurrent.copy_from_slice(m);
        let mut chunks = rest.chunks(nh);
        self.input.copy_from_slice(chunks.next().unwrap());
        self.hidden_bias.copy_from_slice(chunks.next().unwrap());
        self.phase_on.copy_from_slice(chunks.next().unwrap());
        self.phase_base.copy_from_slice(chunks.next().unwrap());
        self.logit.copy_from_slice(chunks.next().unwrap());
        let tail = &rest[5 * nh..];
        self.phase_on_bias = tail[0];
        self.phase_base_bias = tail[1];
        self.logit_bias = tail[2];
    }

    fn amplitudes(&self) -> Result<StateVector> {
        self.to_statevector()
    }

    fn pullback(&self, adjoint: &[Complex64]) -> Vec<f64> {
        let mut grad = RnnParams::zeros(self.n_qubits, self.n_hidden);
        for (s, g) in adjoint.iter().enumerate() {
            if g.re == 0.0 && g.im == 0.0 {
                continue;
            }
            self.backprop(&bits::unpack(s, self.n_qubits), g.re, g.im, &mut grad);
        }
        grad.params()
    }

    fn to_model_state(&self) -> ModelState {
        ModelState::Rnn(self.clone())
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RnnCheckpoint {
    n_qubits: usize,
    n_hidden: usize,
    /// Flat parameters in the layout of [`Ansatz::params`].
    params: Vec<f64>,
}

impl From<&RnnParams> for RnnCheckpoint {
    fn from(p: &RnnParams) -> Self {
        RnnCheckpoint {
            n_qubits: p.n_qubits,
            n_hidden: p.n_hidden,
            params: p.params(),
        }
    }
}

impl TryFrom<RnnCheckpoint> for RnnParams {
    type Error = Error;

    fn try_from(c: RnnCheckpoint) -> Result<Self> {
        if c.params.len() != param_count(c.n_hidden) {
            return Err(Error::Format(format!(
                "RNN checkpoint has {} parameters, expected {}",
                c.params.len(),
                param_count(c.n_hidden)
            )));
        }
        if c.params.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite RNN parameter".into()));
        }
        let mut p = RnnParams::zeros(c.n_qubits, c.n_hidden);
        p.set_params(&c.params);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_recurrence() {
        let p = RnnParams::zeros(3, 4);
        for h in p.hidden_states(&[1, 0, 1]).unwrap() {
            assert!(h.iter().all(|&x| x == 0.0));
        }
        let mut p = RnnParams::zeros(3, 2);
        p.hidden_bias = vec![0.4, -1.1];
        for sigma in [[0, 0, 0], [1, 1, 0], [0, 1, 1]] {
            for h in p.hidden_states(&sigma).unwrap() {
                assert_eq!(h, vec![0.4f64.tanh(), (-1.1f64).tanh()]);
            }
        }
        assert!(p.hidden_states(&[0, 2, 0]).is_err());
    }

    #[test]
    fn uniform_at_zero() {
        let p = RnnParams::zeros(3, 2);
        let want = Complex64::new(-1.5 * std::f64::consts::LN_2, 0.0);
        for s in 0..8 {
            let l = p.log_amplitude(&bits::unpack(s, 3)).unwrap();
            assert!((l - want).norm() < 1e-15);
        }
    }

    #[test]
    fn saturated_logit_bias() {
        let mut p = RnnParams::zeros(3, 2);
        p.logit_bias = 50.0;
        assert!(p.log_amplitude(&[1, 1, 1]).unwrap().re.abs() < 1e-20);
        assert!(p.autoregressive_sample(1000, 1).iter().all(|&s| s == 0b111));
    }

    #[test]
    fn causality_of_hidden_states() {
        let mut g = rng::stream(5, 0);
        let p = RnnParams::random(3, 3, 0.8, true, &mut g);
        let base = p.hidden_states(&[0, 1, 0]).unwrap();
        // flipping σ_j leaves h_1..h_j unchanged (h_j only sees σ_{<j})
        for j in 0..3 {
            let mut s = vec![0u8, 1, 0];
            s[j] ^= 1;
            let h = p.hidden_states(&s).unwrap();
            for i in 0..=j {
                assert_eq!(h[i], base[i]);
            }
            if j + 1 < 3 {
                assert_ne!(h[j + 1], base[j + 1]);
            }
        }
    }

    #[test]
    fn normalized_by_construction() {
        let mut g = rng::stream(6, 0);
        for _ in 0..20 {
            let p = RnnParams::random(4, 3, 1.5, true, &mut g);
            let total: f64 = (0..16)
                .map(|s| {
                    p.log_amplitude(&bits::unpack(s, 4))
                        .unwrap()
                        .exp()
                        .norm_sqr()
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_round_trip_and_counts() {
        let mut g = rng::stream(7, 0);
        let p = RnnParams::random(3, 4, 0.5, true, &mut g);
        let mut q = RnnParams::zeros(3, 4);
        q.set_params(&p.params());
        assert_eq!(p, q);
        assert_eq!(param_count(4), 39);
        assert_eq!(param_count(15), 303);
        assert_eq!(param_count(9), 129);
        assert_eq!(param_count(64), 4419);
    }
}
