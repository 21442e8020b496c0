//! Basis-state indexing. Qubit 0 is the most significant bit.

use crate::error::{Error, Result};

#[inline]
pub fn qubit_mask(qubit: usize, n_qubits: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

#[inline]
pub fn bit(index: usize, qubit: usize, n_qubits: usize) -> u8 {
    ((index >> (n_qubits - 1 - qubit)) & 1) as u8
}

/// Renders a basis index as an N-character `0`/`1` string.
pub fn format_bits(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| {
            if bit(index, q, n_qubits) == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

pub fn parse_bits(s: &str) -> Result<usize> {
    if s.is_empty() || s.len() > usize::BITS as usize - 1 {
        return Err(Error::InvalidBitstring(s.to_string()));
    }
    s.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::InvalidBitstring(s.to_string())),
    })
}

/// Packs a 0/1 slice into a basis index.
pub fn index_of(sigma: &[u8]) -> Result<usize> {
    sigma.iter().try_fold(0usize, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as usize),
        _ => Err(Error::InvalidBitstring(format!("{sigma:?}"))),
    })
}

pub fn unpack(index: usize, n_qubits: usize) -> Vec<u8> {
    (0..n_qubits).map(|q| bit(index, q, n_qubits)).collect()
}

#[inline]
pub fn parity(x: usize) -> f64 {
    if x.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
