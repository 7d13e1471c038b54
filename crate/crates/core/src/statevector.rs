//! Dense statevector simulator.
//!
//! Serves as ground truth for the MPS path and as the exponential-cost
//! baseline in benchmarks. Bit ordering matches the rest of the crate: qubit 0
//! is the most significant bit of the amplitude index.

use num_complex::Complex64 as C64;
use thiserror::Error;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, FusedGate, GateQubits};
use crate::sampler::ShotResult;
use crate::tensor::DenseTensor;

pub const DEFAULT_QUBIT_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateVectorError {
    #[error("{n} qubits exceed the statevector cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("gate touches qubit {qubit} of a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Result<Self, StateVectorError> {
        Self::zero_capped(n_qubits, DEFAULT_QUBIT_CAP)
    }

    pub fn zero_capped(n_qubits: usize, cap: usize) -> Result<Self, StateVectorError> {
        if n_qubits > cap {
            return Err(StateVectorError::TooManyQubits { n: n_qubits, cap });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Self {
        assert!(amplitudes.len().is_power_of_two(), "length must be a power of two");
        Self {
            n_qubits: amplitudes.len().trailing_zeros() as usize,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(C64::norm_sqr).collect()
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    fn check(&self, q: usize) -> Result<(), StateVectorError> {
        if q >= self.n_qubits {
            return Err(StateVectorError::QubitOutOfRange {
                qubit: q,
                n: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn apply_1q(&mut self, m: &DenseTensor, q: usize) -> Result<(), StateVectorError> {
        self.check(q)?;
        let g = m.data();
        let mask = self.bit(q);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
                self.amplitudes[i] = g[0] * a0 + g[1] * a1;
                self.amplitudes[i | mask] = g[2] * a0 + g[3] * a1;
            }
        }
        Ok(())
    }

    /// 4x4 gate in argument order: `a` is the more significant bit of the
    /// matrix index.
    pub fn apply_2q(&mut self, m: &DenseTensor, a: usize, b: usize) -> Result<(), StateVectorError> {
        self.check(a)?;
        self.check(b)?;
        assert_ne!(a, b, "two-qubit gate on a single qubit");
        let g = m.data();
        let (ma, mb) = (self.bit(a), self.bit(b));
        for i in 0..self.amplitudes.len() {
            if i & (ma | mb) == 0 {
                let idx = [i, i | mb, i | ma, i | ma | mb];
                let x = idx.map(|k| self.amplitudes[k]);
                for (row, &k) in idx.iter().enumerate() {
                    let gr = &g[row * 4..row * 4 + 4];
                    self.amplitudes[k] = gr[0] * x[0] + gr[1] * x[1] + gr[2] * x[2] + gr[3] * x[3];
                }
            }
        }
        Ok(())
    }

    pub fn apply_fused(&mut self, g: &FusedGate) -> Result<(), StateVectorError> {
        match g.qubits() {
            GateQubits::One(q) => self.apply_1q(g.matrix(), q),
            GateQubits::Two { low, high, .. } => self.apply_2q(g.matrix(), low, high),
        }
    }

    /// Draws full-register outcomes by inverting the cumulative distribution
    /// with one uniform variate per shot.
    pub fn sample(&self, shots: u64, seed: u64) -> ShotResult {
        let mut cdf = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let key = format!("{idx:0width$b}", width = self.n_qubits);
            *counts.entry(key).or_insert(0) += 1;
        }
        ShotResult { counts, shots, seed }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Runs the raw primitive operations of a circuit from `|0...0>`.
pub fn sv_run(c: &Circuit) -> Result<StateVector, StateVectorError> {
    let mut sv = StateVector::zero(c.n_qubits())?;
    for op in c.ops() {
        let m = op.matrix();
        match op.qubits[..] {
            [q] => sv.apply_1q(&m, q)?,
            [a, b] => sv.apply_2q(&m, a, b)?,
            _ => unreachable!("ops have one or two qubits"),
        }
    }
    Ok(sv)
}

/// Runs a fused gate list from `|0...0>`.
pub fn sv_run_fused(n_qubits: usize, gates: &[FusedGate]) -> Result<StateVector, StateVectorError> {
    let mut sv = StateVector::zero(n_qubits)?;
    for g in gates {
        sv.apply_fused(g)?;
    }
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hadamard() {
        let mut c = Circuit::new(1).unwrap();
        c.h(0).unwrap();
        let sv = sv_run(&c).unwrap();
        for a in sv.amplitudes() {
            assert!((a - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ghz3() {
        let mut c = Circuit::new(3).unwrap();
        c.h(0).unwrap();
        c.cx(0, 1).unwrap();
        c.cx(1, 2).unwrap();
        let sv = sv_run(&c).unwrap();
        let a = sv.amplitudes();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[7].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(a[1..7].iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn control_orientation() {
        // X on qubit 1 then CX with control 1: |01> -> |11>
        let mut c = Circuit::new(2).unwrap();
        c.push(crate::circuit::Gate::X, &[1], &[]).unwrap();
        c.cx(1, 0).unwrap();
        let sv = sv_run(&c).unwrap();
        assert!((sv.amplitudes()[3].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_follows_probabilities() {
        let mut c = Circuit::new(2).unwrap();
        c.push(crate::circuit::Gate::X, &[1], &[]).unwrap();
        let r = sv_run(&c).unwrap().sample(100, 4);
        assert_eq!(r.counts.len(), 1);
        assert_eq!(r.counts["01"], 100);
    }

    #[test]
    fn cap_enforced() {
        assert_eq!(
            StateVector::zero(21),
            Err(StateVectorError::TooManyQubits { n: 21, cap: 20 })
        );
    }
}
