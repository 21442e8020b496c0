//! Pauli strings, Hamiltonian ingestion and qubit-wise measurement grouping.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::{parity, qubit_mask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

pub fn parse_pauli_string(s: &str) -> Result<Vec<Pauli>> {
    s.chars()
        .map(|c| {
            Pauli::from_char(c).ok_or_else(|| Error::InvalidPauli {
                ch: c,
                string: s.to_string(),
            })
        })
        .collect()
}

pub fn format_pauli_string(ops: &[Pauli]) -> String {
    ops.iter().map(|p| p.as_char()).collect()
}

/// Bitmask form of a Pauli string: P|b⟩ = i^{n_y} (-1)^{|b & z|} |b ^ x⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliMasks {
    /// Qubits carrying X or Y.
    pub x: usize,
    /// Qubits carrying Z or Y.
    pub z: usize,
    pub n_y: u32,
}

impl PauliMasks {
    pub fn of(ops: &[Pauli]) -> Self {
        let n = ops.len();
        let mut m = PauliMasks { x: 0, z: 0, n_y: 0 };
        for (q, p) in ops.iter().enumerate() {
            let bit = qubit_mask(q, n);
            match p {
                Pauli::I => {}
                Pauli::X => m.x |= bit,
                Pauli::Z => m.z |= bit,
                Pauli::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.n_y += 1;
                }
            }
        }
        m
    }

    pub fn support(&self) -> usize {
        self.x | self.z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub ops: Vec<Pauli>,
    pub coeff: f64,
}

impl PauliTerm {
    pub fn new(ops: Vec<Pauli>, coeff: f64) -> Self {
        PauliTerm { ops, coeff }
    }

    pub fn parse(s: &str, coeff: f64) -> Result<Self> {
        Ok(PauliTerm::new(parse_pauli_string(s)?, coeff))
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn masks(&self) -> PauliMasks {
        PauliMasks::of(&self.ops)
    }

    pub fn label(&self) -> String {
        format_pauli_string(&self.ops)
    }
}

/// Sparse sum of weighted Pauli strings plus a constant offset.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliHamiltonian {
    pub name: String,
    pub n_qubits: usize,
    pub terms: Vec<PauliTerm>,
    /// Coefficient of the all-identity string.
    pub identity_offset: f64,
}

#[derive(Serialize, Deserialize)]
struct HamiltonianFile {
    #[serde(default)]
    name: String,
    n: usize,
    terms: Vec<(String, f64)>,
}

impl PauliHamiltonian {
    /// Builds a Hamiltonian from raw terms, merging duplicates in
    /// first-occurrence order and moving identity strings into the offset.
    pub fn from_terms(
        name: impl Into<String>,
        n_qubits: usize,
        raw: impl IntoIterator<Item = PauliTerm>,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Hamiltonian("qubit count must be positive".into()));
        }
        if n_qubits >= usize::BITS as usize {
            return Err(Error::Hamiltonian(format!("{n_qubits} qubits is too many")));
        }
        let mut terms: Vec<PauliTerm> = Vec::new();
        let mut seen: HashMap<Vec<Pauli>, usize> = HashMap::new();
        let mut identity_offset = 0.0;
        for t in raw {
            if t.ops.len() != n_qubits {
                return Err(Error::Hamiltonian(format!(
                    "string {} has length {}, expected {n_qubits}",
                    t.label(),
                    t.ops.len()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Hamiltonian(format!(
                    "non-finite coefficient for {}",
                    t.label()
                )));
            }
            if t.is_identity() {
                identity_offset += t.coeff;
            } else if let Some(&i) = seen.get(&t.ops) {
                terms[i].coeff += t.coeff;
            } else {
                seen.insert(t.ops.clone(), terms.len());
                terms.push(t);
            }
        }
        Ok(PauliHamiltonian {
            name: name.into(),
            n_qubits,
            terms,
            identity_offset,
        })
    }

    /// Canonical JSON: identity offset first, then terms in stored order.
    pub fn to_json(&self) -> String {
        let mut terms = vec![("I".repeat(self.n_qubits), self.identity_offset)];
        terms.extend(self.terms.iter().map(|t| (t.label(), t.coeff)));
        let file = HamiltonianFile {
            name: self.name.clone(),
            n: self.n_qubits,
            terms,
        };
        serde_json::to_string_pretty(&file).expect("hamiltonian serialization")
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }
}

pub fn parse_hamiltonian(text: &str) -> Result<PauliHamiltonian> {
    let file: HamiltonianFile = serde_json::from_str(text)?;
    let terms = file
        .terms
        .iter()
        .map(|(s, c)| PauliTerm::parse(s, *c))
        .collect::<Result<Vec<_>>>()?;
    PauliHamiltonian::from_terms(file.name, file.n, terms)
}

pub fn load_hamiltonian(path: impl AsRef<std::path::Path>) -> Result<PauliHamiltonian> {
    parse_hamiltonian(&std::fs::read_to_string(path)?)
}

/// Open-chain transverse-field Ising model −J Σ ZᵢZᵢ₊₁ − h Σ Xᵢ.
pub fn transverse_field_ising(n_qubits: usize, coupling: f64, field: f64) -> PauliHamiltonian {
    let mut terms = Vec::new();
    for i in 0..n_qubits.saturating_sub(1) {
        let mut ops = vec![Pauli::I; n_qubits];
        ops[i] = Pauli::Z;
        ops[i + 1] = Pauli::Z;
        terms.push(PauliTerm::new(ops, -coupling));
    }
    for i in 0..n_qubits {
        let mut ops = vec![Pauli::I; n_qubits];
        ops[i] = Pauli::X;
        terms.push(PauliTerm::new(ops, -field));
    }
    PauliHamiltonian::from_terms(format!("tfim{n_qubits}"), n_qubits, terms)
        .expect("well-formed TFIM")
}

/// A full-weight measurement setting together with the terms it measures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    #[serde(with = "ops_string")]
    pub ops: Vec<Pauli>,
    #[serde(rename = "terms", default)]
    pub covered_terms: Vec<usize>,
}

mod ops_string {
    use super::{format_pauli_string, parse_pauli_string, Pauli};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ops: &[Pauli], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_pauli_string(ops))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Pauli>, D::Error> {
        let s = String::deserialize(d)?;
        parse_pauli_string(&s).map_err(serde::de::Error::custom)
    }
}

impl MeasurementBasis {
    /// A basis with no recorded coverage; identity positions are not allowed.
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.contains(&Pauli::I) {
            return Err(Error::InvalidArgument(format!(
                "measurement basis {} must be full weight",
                format_pauli_string(&ops)
            )));
        }
        Ok(MeasurementBasis {
            ops,
            covered_terms: Vec::new(),
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_pauli_string(s)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn label(&self) -> String {
        format_pauli_string(&self.ops)
    }

    /// Qubit-wise compatibility: every non-identity position agrees.
    pub fn measures(&self, ops: &[Pauli]) -> bool {
        ops.len() == self.ops.len()
            && ops
                .iter()
                .zip(&self.ops)
                .all(|(&t, &b)| t == Pauli::I || t == b)
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Greedy first-fit qubit-wise grouping.
///
/// Terms are visited in stored order and placed into the first open basis
/// whose fixed positions agree; free positions left at the end become Z.
pub fn group_bases(h: &PauliHamiltonian) -> Vec<MeasurementBasis> {
    let mut open: Vec<(Vec<Pauli>, Vec<usize>)> = Vec::new();
    for (idx, term) in h.terms.iter().enumerate() {
        let slot = open.iter_mut().find(|(ops, _)| {
            ops.iter()
                .zip(&term.ops)
                .all(|(&b, &t)| b == Pauli::I || t == Pauli::I || b == t)
        });
        match slot {
            Some((ops, covered)) => {
                for (b, &t) in ops.iter_mut().zip(&term.ops) {
                    if t != Pauli::I {
                        *b = t;
                    }
                }
                covered.push(idx);
            }
            None => open.push((term.ops.clone(), vec![idx])),
        }
    }
    open.into_iter()
        .map(|(ops, covered_terms)| MeasurementBasis {
            ops: ops
                .into_iter()
                .map(|p| if p == Pauli::I { Pauli::Z } else { p })
                .collect(),
            covered_terms,
        })
        .collect()
}

/// Eigenvalue (±1) of a covered term on a measured outcome index.
pub fn term_eigenvalue(term: &PauliTerm, basis: &MeasurementBasis, outcome: usize) -> Result<i8> {
    if !basis.measures(&term.ops) {
        return Err(Error::NotCovered {
            term: term.label(),
            basis: basis.label(),
        });
    }
    Ok(parity(outcome & term.masks().support()) as i8)
}
