//! Slow, independent reference implementations built from dense matrices
//! and explicit sums. Nothing here calls the library's own kernels.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nqs_core::pauli::{MeasurementBasis, Pauli, PauliHamiltonian};
use nqs_core::rbm::RbmParams;
use nqs_core::sampler::WeightedData;
use nqs_core::statevec::StateVector;
use nqs_core::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single(p: Pauli) -> CMat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match p {
        Pauli::I => CMat::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Single-qubit R† for measuring along `p`.
pub fn rotation_dagger(p: Pauli) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match p {
        Pauli::X => CMat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, -s), c(s, 0.0), c(0.0, s)]),
        _ => single(Pauli::I),
    }
}

/// Kronecker product with qubit 0 as the leftmost factor.
pub fn kron_all(factors: impl IntoIterator<Item = CMat>) -> CMat {
    factors
        .into_iter()
        .fold(CMat::from_element(1, 1, c(1.0, 0.0)), |acc, f| {
            acc.kronecker(&f)
        })
}

pub fn pauli_matrix(ops: &[Pauli]) -> CMat {
    kron_all(ops.iter().map(|&p| single(p)))
}

pub fn hamiltonian_matrix(h: &PauliHamiltonian) -> CMat {
    let d = 1 << h.n_qubits;
    let mut m = CMat::identity(d, d) * c(h.identity_offset, 0.0);
    for t in &h.terms {
        m += pauli_matrix(&t.ops) * c(t.coeff, 0.0);
    }
    m
}

pub fn basis_rotation_dagger(basis: &MeasurementBasis) -> CMat {
    kron_all(basis.ops.iter().map(|&p| rotation_dagger(p)))
}

pub fn vec_of(s: &StateVector) -> CVec {
    CVec::from_column_slice(s.amplitudes())
}

/// ⟨φ|M|φ⟩
pub fn dense_expectation(m: &CMat, s: &StateVector) -> f64 {
    let v = vec_of(s);
    (v.adjoint() * m * &v)[(0, 0)].re
}

/// Lowest eigenpair of a Hermitian matrix.
pub fn dense_ground(m: &CMat) -> (f64, CVec) {
    let e = m.clone().symmetric_eigen();
    let (i, _) = e
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    (e.eigenvalues[i], e.eigenvectors.column(i).into_owned())
}

pub fn sorted_spectrum(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// |⟨σ|R†|φ⟩|² for all σ.
pub fn born(s: &StateVector, basis: &MeasurementBasis) -> Vec<f64> {
    (basis_rotation_dagger(basis) * vec_of(s))
        .iter()
        .map(|a| a.norm_sqr())
        .collect()
}

/// −(1/|𝒟|) Σ w log|⟨σ|R_k†|φ⟩|² term by term.
pub fn direct_loss(amps: &[Complex64], data: &WeightedData) -> f64 {
    let v = CVec::from_column_slice(amps);
    let mut acc = 0.0;
    for (basis, entries) in data.bases.iter().zip(&data.entries) {
        let r = basis_rotation_dagger(basis);
        for &(sigma, w) in entries {
            let mut a = c(0.0, 0.0);
            for tau in 0..v.len() {
                a += r[(sigma, tau)] * v[tau];
            }
            acc -= w * a.norm_sqr().ln();
        }
    }
    acc / data.total
}

/// (1/|𝒟|) Σ_k Σ_σ w R_k|σ⟩ / ⟨φ|R_k|σ⟩, with R_k = (R_k†)†.
pub fn direct_t(amps: &[Complex64], data: &WeightedData) -> Vec<Complex64> {
    let d = amps.len();
    let mut out = vec![c(0.0, 0.0); d];
    for (basis, entries) in data.bases.iter().zip(&data.entries) {
        let r = basis_rotation_dagger(basis).adjoint();
        for &(sigma, w) in entries {
            let mut overlap = c(0.0, 0.0);
            for tau in 0..d {
                overlap += amps[tau].conj() * r[(tau, sigma)];
            }
            for tau in 0..d {
                out[tau] += r[(tau, sigma)] * w / overlap;
            }
        }
    }
    out.iter().map(|x| x / data.total).collect()
}

/// Bit i of σ with qubit 0 as the most significant bit.
pub fn bit(sigma: usize, i: usize, n: usize) -> usize {
    (sigma >> (n - 1 - i)) & 1
}

/// Unnormalized RBM amplitude as an explicit sum over hidden
/// configurations: Σ_h exp(b·σ + c·h + hᵀWσ).
pub fn rbm_hidden_sum(p: &RbmParams, sigma: usize) -> Complex64 {
    let n = p.n_visible;
    let mut total = c(0.0, 0.0);
    for h in 0..1usize << p.n_hidden {
        let mut e = c(0.0, 0.0);
        for i in 0..n {
            if bit(sigma, i, n) == 1 {
                e += p.visible_bias[i];
            }
        }
        for j in 0..p.n_hidden {
            if (h >> j) & 1 == 1 {
                e += p.hidden_bias[j];
                for i in 0..n {
                    if bit(sigma, i, n) == 1 {
                        e += p.weights[j * n + i];
                    }
                }
            }
        }
        total += e.exp();
    }
    total
}

/// G with a plain double loop over bases and outcomes.
pub fn direct_g(model: &StateVector, target: &StateVector, bases: &[MeasurementBasis]) -> f64 {
    let mut acc = 0.0;
    for b in bases {
        let p = born(target, b);
        let q = born(model, b);
        for s in 0..p.len() {
            if p[s] > 0.0 {
                acc -= p[s] * q[s].ln();
            }
        }
    }
    acc / bases.len() as f64
}

/// Central differences of `f` over each coordinate of `x`.
pub fn central_difference(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + step;
            let up = f(&p);
            p[i] = x[i] - step;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

pub fn random_hamiltonian<R: rand::Rng>(n: usize, n_terms: usize, rng: &mut R) -> PauliHamiltonian {
    use nqs_core::pauli::PauliTerm;
    let ops = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let terms: Vec<PauliTerm> = (0..n_terms)
        .map(|_| {
            PauliTerm::new(
                (0..n).map(|_| ops[rng.random_range(0..4)]).collect(),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    PauliHamiltonian::from_terms("random", n, terms).unwrap()
}

/// Every full-weight basis over {X, Y, Z}^n, in a fixed order.
pub fn all_bases(n: usize) -> Vec<MeasurementBasis> {
    let axes = [Pauli::X, Pauli::Y, Pauli::Z];
    (0..3usize.pow(n as u32))
        .map(|mut code| {
            let mut ops = vec![Pauli::Z; n];
            for q in (0..n).rev() {
                ops[q] = axes[code % 3];
                code /= 3;
            }
            MeasurementBasis::new(ops).unwrap()
        })
        .collect()
}
