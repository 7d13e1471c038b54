//! Thin singular value decomposition with rank truncation.
//!
//! The decomposition is a one-sided (Hestenes) Jacobi iteration: columns of
//! the working matrix are rotated pairwise until mutually orthogonal, at which
//! point their norms are the singular values. It is slower than bidiagonal QR
//! for large matrices but attains high relative accuracy and near-exact
//! isometry of both factors, which the truncation and fidelity bookkeeping
//! above it depend on.

use num_complex::Complex64 as C64;

use crate::tensor::{DenseTensor, Result, TensorError};

const MAX_SWEEPS: usize = 80;

/// Truncation controls for [`svd`]: keep at most `max_rank` singular values,
/// and drop trailing values whose cumulative relative squared weight stays
/// within `cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub max_rank: Option<usize>,
    pub cutoff: f64,
}

impl Truncation {
    pub const NONE: Truncation = Truncation {
        max_rank: None,
        cutoff: 0.0,
    };
}

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m x k`, isometric columns.
    pub u: DenseTensor,
    /// Descending, non-negative.
    pub s: Vec<f64>,
    /// `k x n`, isometric rows.
    pub vdag: DenseTensor,
    /// Squared weight of the dropped singular values over the total squared
    /// norm of the input.
    pub discarded_weight: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U * diag(s) * V^dagger`.
    pub fn reconstruct(&self) -> DenseTensor {
        let (m, k) = (self.u.shape()[0], self.s.len());
        let mut us = self.u.clone();
        for row in us.data_mut().chunks_exact_mut(k) {
            for (x, &s) in row.iter_mut().zip(&self.s) {
                *x *= s;
            }
        }
        let out = crate::tensor::matmul(&us, &self.vdag).expect("factor shapes agree");
        debug_assert_eq!(out.shape()[0], m);
        out
    }
}

/// Number of singular values to keep under `trunc`, and the discarded
/// relative weight.
pub fn truncation_rank(s: &[f64], trunc: Truncation) -> (usize, f64) {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if s.is_empty() {
        return (0, 0.0);
    }
    let mut keep = s.len();
    if total > 0.0 {
        let mut dropped = 0.0;
        while keep > 1 {
            let w = s[keep - 1] * s[keep - 1];
            if (dropped + w) / total <= trunc.cutoff {
                dropped += w;
                keep -= 1;
            } else {
                break;
            }
        }
    } else {
        keep = 1;
    }
    if let Some(cap) = trunc.max_rank {
        keep = keep.min(cap.max(1));
    }
    let discarded = if total > 0.0 {
        (s[keep..].iter().map(|x| x * x).sum::<f64>() / total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (keep, discarded)
}

/// Truncated SVD of a rank-2 tensor.
pub fn svd(m: &DenseTensor, trunc: Truncation) -> Result<SvdResult> {
    let (rows, cols) = m.matrix_dims()?;
    if m.data().iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(TensorError::NonFinite);
    }
    let full = thin_svd(m.data(), rows, cols)?;
    let (keep, discarded_weight) = truncation_rank(&full.s, trunc);
    let k_full = full.s.len();

    let mut u = Vec::with_capacity(rows * keep);
    for i in 0..rows {
        u.extend_from_slice(&full.u[i * k_full..i * k_full + keep]);
    }
    let vdag = full.vdag[..keep * cols].to_vec();
    Ok(SvdResult {
        u: DenseTensor::matrix(rows, keep, u)?,
        s: full.s[..keep].to_vec(),
        vdag: DenseTensor::matrix(keep, cols, vdag)?,
        discarded_weight,
    })
}

/// Untruncated thin factors in row-major layout.
struct ThinSvd {
    /// rows x k
    u: Vec<C64>,
    s: Vec<f64>,
    /// k x cols
    vdag: Vec<C64>,
}

fn thin_svd(a: &[C64], rows: usize, cols: usize) -> Result<ThinSvd> {
    if rows >= cols {
        // column-major copy of A
        let mut work = vec![C64::new(0.0, 0.0); rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                work[j * rows + i] = a[i * cols + j];
            }
        }
        let (s, ucols, vcols) = jacobi(work, rows, cols)?;
        let k = cols;
        // ucols: column j of U at ucols[j*rows..]; vcols: column j of V at vcols[j*cols..]
        let mut u = vec![C64::new(0.0, 0.0); rows * k];
        for j in 0..k {
            for i in 0..rows {
                u[i * k + j] = ucols[j * rows + i];
            }
        }
        let mut vdag = vec![C64::new(0.0, 0.0); k * cols];
        for j in 0..k {
            for i in 0..cols {
                vdag[j * cols + i] = vcols[j * cols + i].conj();
            }
        }
        Ok(ThinSvd { u, s, vdag })
    } else {
        // A^dagger = U' S V'^dagger  =>  A = V' S U'^dagger
        // column-major storage of A^dagger is the conjugate of A row-major
        let work: Vec<C64> = a.iter().map(|x| x.conj()).collect();
        let (s, ucols, vcols) = jacobi(work, cols, rows)?;
        let k = rows;
        // U = V' (rows x k), column j at vcols[j*rows..]
        let mut u = vec![C64::new(0.0, 0.0); rows * k];
        for j in 0..k {
            for i in 0..rows {
                u[i * k + j] = vcols[j * rows + i];
            }
        }
        // V^dagger = U'^dagger (k x cols), row j is conj of column j of U'
        let mut vdag = vec![C64::new(0.0, 0.0); k * cols];
        for j in 0..k {
            for i in 0..cols {
                vdag[j * cols + i] = ucols[j * cols + i].conj();
            }
        }
        Ok(ThinSvd { u, s, vdag })
    }
}

#[inline]
fn dot(x: &[C64], y: &[C64]) -> C64 {
    // x^dagger y
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    C64::new(re, im)
}

#[inline]
fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum()
}

/// Rotates `(x, y) <- (c x - s e^{-i phi} y, s x + c e^{-i phi} y)`.
#[inline]
fn rotate(x: &mut [C64], y: &mut [C64], c: f64, s: f64, phase: C64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let bt = *b * phase;
        let a0 = *a;
        *a = a0 * c - bt * s;
        *b = a0 * s + bt * c;
    }
}

fn pair_mut(buf: &mut [C64], len: usize, p: usize, q: usize) -> (&mut [C64], &mut [C64]) {
    debug_assert!(p < q);
    let (lo, hi) = buf.split_at_mut(q * len);
    (&mut lo[p * len..(p + 1) * len], &mut hi[..len])
}

/// One-sided Jacobi on a column-major `m x n` matrix with `m >= n`.
///
/// Returns singular values (descending), the left singular vectors
/// (column-major `m x n`) and the right singular vectors (column-major `n x n`).
fn jacobi(mut a: Vec<C64>, m: usize, n: usize) -> Result<(Vec<f64>, Vec<C64>, Vec<C64>)> {
    let mut v = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        v[j * n + j] = C64::new(1.0, 0.0);
    }
    let tol = f64::EPSILON * (m as f64).sqrt().max(1.0);
    let mut norms: Vec<f64> = (0..n).map(|j| norm_sqr(&a[j * m..(j + 1) * m])).collect();
    // couplings this small relative to the whole matrix are rounding noise;
    // chasing them between near-null columns never settles
    let floor = f64::EPSILON * f64::EPSILON * norms.iter().sum::<f64>();

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(TensorError::SvdNoConvergence { sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (ap, aq) = pair_mut(&mut a, m, p, q);
                let gamma = dot(ap, aq);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() || g <= floor {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(ap, aq, c, s, phase);
                let (vp, vq) = pair_mut(&mut v, n, p, q);
                rotate(vp, vq, c, s, phase);
                norms[p] = alpha - t * g;
                norms[q] = beta + t * g;
            }
        }
        // refresh accumulated norms to stop drift
        for (j, nrm) in norms.iter_mut().enumerate() {
            *nrm = norm_sqr(&a[j * m..(j + 1) * m]);
        }
        converged = !rotated;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sing: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&i, &j| sing[j].total_cmp(&sing[i]));

    let smax = sing[order[0]];
    let mut s_sorted = Vec::with_capacity(n);
    let mut u = vec![C64::new(0.0, 0.0); m * n];
    let mut vs = vec![C64::new(0.0, 0.0); n * n];
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sj = sing[src];
        s_sorted.push(sj);
        vs[dst * n..(dst + 1) * n].copy_from_slice(&v[src * n..(src + 1) * n]);
        if sj > 0.0 && sj > smax * 1e-150 {
            let inv = 1.0 / sj;
            for (o, &x) in u[dst * m..(dst + 1) * m].iter_mut().zip(&a[src * m..(src + 1) * m]) {
                *o = x * inv;
            }
        } else {
            deficient.push(dst);
        }
    }
    // columns for tiny singular values are mostly rounding noise; project
    // out the stronger directions so U stays orthonormal
    let mut kept: Vec<usize> = Vec::with_capacity(n);
    for j in 0..n {
        if deficient.contains(&j) {
            continue;
        }
        let (done, rest) = u.split_at_mut(j * m);
        let col = &mut rest[..m];
        for _ in 0..2 {
            for &k in &kept {
                let uk = &done[k * m..(k + 1) * m];
                let proj = dot(uk, col);
                for (x, &y) in col.iter_mut().zip(uk) {
                    *x -= y * proj;
                }
            }
        }
        let nrm = norm_sqr(col).sqrt();
        if nrm > 0.5 {
            col.iter_mut().for_each(|x| *x /= nrm);
            kept.push(j);
        } else {
            deficient.push(j);
        }
    }
    if !deficient.is_empty() {
        complete_basis(&mut u, m, &deficient);
    }
    Ok((s_sorted, u, vs))
}

/// Fills the listed columns of a column-major `m x n` matrix with unit
/// vectors orthogonal to all other columns.
fn complete_basis(u: &mut [C64], m: usize, missing: &[usize]) {
    let n = u.len() / m;
    let mut filled: Vec<bool> = (0..n).map(|j| !missing.contains(&j)).collect();
    let mut candidate = 0usize;
    for &col in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal basis");
            let mut w = vec![C64::new(0.0, 0.0); m];
            w[candidate] = C64::new(1.0, 0.0);
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for j in (0..n).filter(|&j| filled[j]) {
                    let uj = &u[j * m..(j + 1) * m];
                    let proj = dot(uj, &w);
                    for (x, &y) in w.iter_mut().zip(uj) {
                        *x -= y * proj;
                    }
                }
            }
            let nrm = norm_sqr(&w).sqrt();
            if nrm > 1e-8 {
                for (o, x) in u[col * m..(col + 1) * m].iter_mut().zip(&w) {
                    *o = x / nrm;
                }
                filled[col] = true;
                break;
            }
        }
    }
}
