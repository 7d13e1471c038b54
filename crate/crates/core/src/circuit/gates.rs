//! Standard gate matrices.
//!
//! Two-qubit matrices are indexed `2 * b_first + b_second`: the first qubit
//! argument is the more significant bit.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::tensor::DenseTensor;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(entries: [C64; 4]) -> DenseTensor {
    DenseTensor::matrix(2, 2, entries.to_vec()).expect("2x2")
}

fn m4(entries: [f64; 16]) -> DenseTensor {
    DenseTensor::real_matrix(4, 4, &entries).expect("4x4")
}

pub fn identity() -> DenseTensor {
    m2([c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)])
}

pub fn h() -> DenseTensor {
    let r = FRAC_1_SQRT_2;
    m2([c(r, 0.), c(r, 0.), c(r, 0.), c(-r, 0.)])
}

pub fn x() -> DenseTensor {
    m2([c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn y() -> DenseTensor {
    m2([c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn z() -> DenseTensor {
    phase(std::f64::consts::PI)
}

pub fn s() -> DenseTensor {
    m2([c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)])
}

pub fn sdg() -> DenseTensor {
    m2([c(1., 0.), c(0., 0.), c(0., 0.), c(0., -1.)])
}

pub fn t() -> DenseTensor {
    phase(std::f64::consts::FRAC_PI_4)
}

pub fn tdg() -> DenseTensor {
    phase(-std::f64::consts::FRAC_PI_4)
}

/// `diag(1, e^{i lambda})`, also `u1`.
pub fn phase(lambda: f64) -> DenseTensor {
    m2([c(1., 0.), c(0., 0.), c(0., 0.), C64::from_polar(1.0, lambda)])
}

pub fn rx(theta: f64) -> DenseTensor {
    let (sn, cs) = (theta / 2.0).sin_cos();
    m2([c(cs, 0.), c(0., -sn), c(0., -sn), c(cs, 0.)])
}

pub fn ry(theta: f64) -> DenseTensor {
    let (sn, cs) = (theta / 2.0).sin_cos();
    m2([c(cs, 0.), c(-sn, 0.), c(sn, 0.), c(cs, 0.)])
}

pub fn rz(theta: f64) -> DenseTensor {
    m2([
        C64::from_polar(1.0, -theta / 2.0),
        c(0., 0.),
        c(0., 0.),
        C64::from_polar(1.0, theta / 2.0),
    ])
}

pub fn u3(theta: f64, phi: f64, lambda: f64) -> DenseTensor {
    let (sn, cs) = (theta / 2.0).sin_cos();
    m2([
        c(cs, 0.),
        -C64::from_polar(sn, lambda),
        C64::from_polar(sn, phi),
        C64::from_polar(cs, phi + lambda),
    ])
}

pub fn u2(phi: f64, lambda: f64) -> DenseTensor {
    u3(std::f64::consts::FRAC_PI_2, phi, lambda)
}

/// Controlled-X with the first qubit as control.
pub fn cx() -> DenseTensor {
    m4([
        1., 0., 0., 0., //
        0., 1., 0., 0., //
        0., 0., 0., 1., //
        0., 0., 1., 0.,
    ])
}

pub fn cz() -> DenseTensor {
    m4([
        1., 0., 0., 0., //
        0., 1., 0., 0., //
        0., 0., 1., 0., //
        0., 0., 0., -1.,
    ])
}

pub fn swap() -> DenseTensor {
    m4([
        1., 0., 0., 0., //
        0., 0., 1., 0., //
        0., 1., 0., 0., //
        0., 0., 0., 1.,
    ])
}

/// Kronecker product `a ⊗ b` of two 2x2 matrices; `a` acts on the more
/// significant qubit.
pub fn kron(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![c(0., 0.); 16];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k) * 4 + (2 * j + l)] = ad[i * 2 + j] * bd[k * 2 + l];
                }
            }
        }
    }
    DenseTensor::matrix(4, 4, out).expect("4x4")
}

/// `SWAP * m * SWAP`: the same operator with its two qubit arguments exchanged.
pub fn swap_conjugate(m: &DenseTensor) -> DenseTensor {
    // permute rows and columns by the bit swap 1 <-> 2
    const P: [usize; 4] = [0, 2, 1, 3];
    let d = m.data();
    let mut out = vec![c(0., 0.); 16];
    for i in 0..4 {
        for j in 0..4 {
            out[i * 4 + j] = d[P[i] * 4 + P[j]];
        }
    }
    DenseTensor::matrix(4, 4, out).expect("4x4")
}

/// `max |M^dagger M - I|`.
pub fn unitarity_error(m: &DenseTensor) -> f64 {
    let (r, _) = m.matrix_dims().expect("matrix");
    let g = crate::tensor::matmul(&m.adjoint().expect("matrix"), m).expect("square");
    g.max_abs_diff(&DenseTensor::identity(r).expect("square"))
}
