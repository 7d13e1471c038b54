//! Benchmark circuit generators: GHZ preparation, seeded brickwork circuits
//! and unstructured random circuits.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::circuit::{Circuit, Gate};
use crate::tensor::DenseTensor;

/// `h q[0]` followed by a CX ladder.
pub fn ghz_circuit(n: usize) -> Circuit {
    let mut c = Circuit::new(n).expect("n >= 1");
    c.h(0).expect("in range");
    for i in 0..n.saturating_sub(1) {
        c.cx(i, i + 1).expect("in range");
    }
    c
}

pub fn ghz_qasm(n: usize, measure: bool) -> String {
    let mut s = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(s, "qreg q[{n}];");
    if measure {
        let _ = writeln!(s, "creg c[{n}];");
    }
    s.push_str("h q[0];\n");
    for i in 0..n.saturating_sub(1) {
        let _ = writeln!(s, "cx q[{}],q[{}];", i, i + 1);
    }
    if measure {
        s.push_str("measure q -> c;\n");
    }
    s
}

/// Haar-random unitary of dimension `dim`: Gram-Schmidt on a complex
/// Gaussian matrix, whose positive diagonal of R fixes the column phases.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> DenseTensor {
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im)
                })
                .collect()
        })
        .collect();
    for j in 0..dim {
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let ck = cols[k].clone();
                for (x, y) in cols[j].iter_mut().zip(&ck) {
                    *x -= y * proj;
                }
            }
        }
        let nrm = cols[j].iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|x| *x /= nrm);
    }
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            data[i * dim + j] = x;
        }
    }
    DenseTensor::matrix(dim, dim, data).expect("square")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Entangler {
    /// Plain `cx`, expressible in standard OpenQASM.
    #[default]
    Cx,
    /// Haar-random 4x4 unitaries, emitted as `unitary2(k)` references to a
    /// sidecar matrix list.
    Haar,
}

#[derive(Debug, Clone)]
pub struct Brickwork {
    pub circuit: Circuit,
    pub qasm: String,
    /// Matrices referenced by `unitary2(k)` (empty for [`Entangler::Cx`]).
    pub unitaries: Vec<DenseTensor>,
    /// Number of units that contain at least one entangling gate.
    pub entangling_layers: usize,
}

/// `depth` repetitions of: a seeded random `u3` on every qubit, then
/// entangling gates on pairs `(0,1), (2,3), ...` (even units) or
/// `(1,2), (3,4), ...` (odd units).
pub fn brickwork(n: usize, depth: usize, seed: u64, entangler: Entangler) -> Brickwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circuit = Circuit::new(n).expect("n >= 1");
    let mut qasm = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(qasm, "qreg q[{n}];");
    let mut unitaries = Vec::new();
    let mut entangling_layers = 0;
    let two_pi = 2.0 * std::f64::consts::PI;
    for unit in 0..depth {
        for q in 0..n {
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let phi = rng.random_range(0.0..two_pi);
            let lambda = rng.random_range(0.0..two_pi);
            circuit.u3(q, theta, phi, lambda).expect("in range");
            let _ = writeln!(qasm, "u3({theta:?},{phi:?},{lambda:?}) q[{q}];");
        }
        let mut any = false;
        for a in (unit % 2..n.saturating_sub(1)).step_by(2) {
            any = true;
            match entangler {
                Entangler::Cx => {
                    circuit.cx(a, a + 1).expect("in range");
                    let _ = writeln!(qasm, "cx q[{}],q[{}];", a, a + 1);
                }
                Entangler::Haar => {
                    let u = haar_unitary(4, &mut rng);
                    circuit.unitary2(a, a + 1, u.clone()).expect("unitary");
                    let _ = writeln!(qasm, "unitary2({}) q[{}],q[{}];", unitaries.len(), a, a + 1);
                    unitaries.push(u);
                }
            }
        }
        entangling_layers += usize::from(any);
    }
    Brickwork {
        circuit,
        qasm,
        unitaries,
        entangling_layers,
    }
}

/// Random circuit of `n_ops` primitive operations; two-qubit gates pick any
/// pair of distinct qubits, so non-local gates are common.
pub fn random_circuit(n: usize, n_ops: usize, rng: &mut impl Rng) -> Circuit {
    let mut c = Circuit::new(n).expect("n >= 1");
    let two_pi = 2.0 * std::f64::consts::PI;
    for _ in 0..n_ops {
        if n >= 2 && rng.random_bool(0.5) {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            match rng.random_range(0..4) {
                0 => c.push(Gate::Cx, &[a, b], &[]),
                1 => c.push(Gate::Cz, &[a, b], &[]),
                2 => c.push(Gate::Swap, &[a, b], &[]),
                _ => c.unitary2(a, b, haar_unitary(4, rng)),
            }
            .expect("valid op");
        } else {
            let q = rng.random_range(0..n);
            let angles = [
                rng.random_range(0.0..two_pi),
                rng.random_range(0.0..two_pi),
                rng.random_range(0.0..two_pi),
            ];
            match rng.random_range(0..5) {
                0 => c.push(Gate::H, &[q], &[]),
                1 => c.push(Gate::T, &[q], &[]),
                2 => c.push(Gate::Rx, &[q], &angles[..1]),
                3 => c.push(Gate::U2, &[q], &angles[..2]),
                _ => c.push(Gate::U3, &[q], &angles),
            }
            .expect("valid op");
        }
    }
    c
}
