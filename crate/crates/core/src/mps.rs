//! Open-boundary matrix product state over qubits.
//!
//! Site `i` is a rank-3 tensor of shape `(D_left, 2, D_right)`; qubit 0 is the
//! leftmost site and the most significant bit of statevector indices and
//! bitstrings.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::svd::{svd, Truncation};
use crate::tensor::{matmul_raw, DenseTensor, TensorError};

/// Largest qubit count [`MpsState::to_statevector`] will expand by default.
pub const DEFAULT_STATEVECTOR_CAP: usize = 20;

/// Norms below this are treated as a degenerate (zero) state.
pub const ZERO_NORM: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpsError {
    #[error("an MPS needs at least one site")]
    Empty,
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("qubits ({0}, {1}) are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("two-qubit gate on repeated qubit {0}")]
    RepeatedQubit(usize),
    #[error("bitstring must have {expected} characters from {{0,1}}, got {got:?}")]
    BadBits { expected: usize, got: String },
    #[error("statevector of {n} qubits exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("state norm {0:e} is numerically zero")]
    ZeroNorm(f64),
    #[error("invalid MPS structure: {0}")]
    Structure(String),
    #[error("gate matrix has shape {0:?}")]
    GateShape(Vec<usize>),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, MpsError>;

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    pub(crate) sites: Vec<DenseTensor>,
    pub(crate) bond_dims: Vec<usize>,
    pub(crate) ortho_center: Option<usize>,
}

fn zero_site() -> DenseTensor {
    DenseTensor::new(vec![1, 2, 1], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).expect("site shape")
}

impl MpsState {
    /// Product state `|0...0>` with every bond of dimension one.
    pub fn init_zero(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(MpsError::Empty);
        }
        Ok(Self {
            sites: vec![zero_site(); n],
            bond_dims: vec![1; n + 1],
            ortho_center: Some(0),
        })
    }

    /// Builds a state from explicit site tensors, checking the chain structure.
    pub fn from_sites(sites: Vec<DenseTensor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(MpsError::Empty);
        }
        let mut bond_dims = Vec::with_capacity(sites.len() + 1);
        bond_dims.push(sites[0].shape().first().copied().unwrap_or(0));
        for s in &sites {
            bond_dims.push(s.shape().last().copied().unwrap_or(0));
        }
        let state = Self {
            sites,
            bond_dims,
            ortho_center: None,
        };
        state.validate()?;
        Ok(state)
    }

    /// Checks boundary bonds, shape agreement between neighbours and the
    /// physical extent of every site.
    pub fn validate(&self) -> Result<()> {
        let n = self.sites.len();
        let fail = |msg: String| Err(MpsError::Structure(msg));
        if self.bond_dims.len() != n + 1 {
            return fail(format!("{} bond entries for {n} sites", self.bond_dims.len()));
        }
        if self.bond_dims[0] != 1 || self.bond_dims[n] != 1 {
            return fail("boundary bonds must have dimension 1".into());
        }
        for (i, s) in self.sites.iter().enumerate() {
            match *s.shape() {
                [l, 2, r] if l == self.bond_dims[i] && r == self.bond_dims[i + 1] => {}
                _ => {
                    return fail(format!(
                        "site {i} has shape {:?}, bonds are ({}, {})",
                        s.shape(),
                        self.bond_dims[i],
                        self.bond_dims[i + 1]
                    ))
                }
            }
        }
        if let Some(c) = self.ortho_center {
            if c >= n {
                return fail(format!("orthogonality center {c} out of range"));
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &DenseTensor {
        &self.sites[i]
    }

    /// `n + 1` entries; entry `i` is the left bond of site `i`.
    pub fn bond_dims(&self) -> &[usize] {
        &self.bond_dims
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims.iter().copied().max().unwrap_or(1)
    }

    pub fn ortho_center(&self) -> Option<usize> {
        self.ortho_center
    }

    /// Total number of stored complex entries.
    pub fn element_count(&self) -> usize {
        self.sites.iter().map(DenseTensor::len).sum()
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits() {
            return Err(MpsError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits(),
            });
        }
        Ok(())
    }

    /// Re-reads bond dimensions from the site shapes in `lo..=hi`.
    pub(crate) fn refresh_bonds(&mut self, lo: usize, hi: usize) {
        for i in lo..=hi {
            let shape = self.sites[i].shape();
            self.bond_dims[i] = shape[0];
            self.bond_dims[i + 1] = shape[2];
        }
    }

    /// Multiplies site `i` by `alpha`.
    pub fn scale_site(&mut self, i: usize, alpha: C64) -> Result<()> {
        self.check_qubit(i)?;
        self.sites[i].scale(alpha);
        Ok(())
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &MpsState) -> Result<C64> {
        if self.n_qubits() != other.n_qubits() {
            return Err(MpsError::Structure(format!(
                "overlap of {} and {} qubit states",
                self.n_qubits(),
                other.n_qubits()
            )));
        }
        // env[a, b]: a over self's bond, b over other's bond
        let mut env = vec![C64::new(1.0, 0.0)];
        let (mut da, mut db) = (1usize, 1usize);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let (ra, rb) = (a.shape()[2], b.shape()[2]);
            let mut next = vec![C64::new(0.0, 0.0); ra * rb];
            for phys in 0..2 {
                // tmp[a_l, r_b] = sum_{b_l} env[a_l, b_l] B[b_l, phys, r_b]
                let bslice = phys_slice(b, phys);
                let tmp = matmul_raw(&env, &bslice, da, db, rb);
                let aslice = phys_slice(a, phys);
                // next[r_a, r_b] += sum_{a_l} conj(A[a_l, phys, r_a]) tmp[a_l, r_b]
                for al in 0..da {
                    for r_a in 0..ra {
                        let w = aslice[al * ra + r_a].conj();
                        if w == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let row = &tmp[al * rb..(al + 1) * rb];
                        for (o, &t) in next[r_a * rb..(r_a + 1) * rb].iter_mut().zip(row) {
                            *o += w * t;
                        }
                    }
                }
            }
            env = next;
            da = ra;
            db = rb;
        }
        Ok(env[0])
    }

    /// 2-norm of the represented vector.
    pub fn norm(&self) -> f64 {
        self.overlap(self).expect("same length").re.max(0.0).sqrt()
    }

    fn parse_bits(&self, bits: &str) -> Result<Vec<usize>> {
        let bad = || MpsError::BadBits {
            expected: self.n_qubits(),
            got: bits.to_string(),
        };
        if bits.chars().count() != self.n_qubits() {
            return Err(bad());
        }
        bits.chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(bad()),
            })
            .collect()
    }

    /// `<bits|psi>`, character `i` of `bits` being qubit `i`.
    pub fn amplitude(&self, bits: &str) -> Result<C64> {
        let bits = self.parse_bits(bits)?;
        Ok(self.amplitude_of(&bits))
    }

    pub(crate) fn amplitude_of(&self, bits: &[usize]) -> C64 {
        let mut env = vec![C64::new(1.0, 0.0)];
        for (site, &b) in self.sites.iter().zip(bits) {
            let (l, r) = (site.shape()[0], site.shape()[2]);
            env = matmul_raw(&env, &phys_slice(site, b), 1, l, r);
        }
        env[0]
    }

    pub fn to_statevector(&self) -> Result<Vec<C64>> {
        self.to_statevector_capped(DEFAULT_STATEVECTOR_CAP)
    }

    /// Full contraction into `2^n` amplitudes, refusing when `n > cap`.
    pub fn to_statevector_capped(&self, cap: usize) -> Result<Vec<C64>> {
        let n = self.n_qubits();
        if n > cap {
            return Err(MpsError::TooLarge { n, cap });
        }
        // psi: (2^i x D) row-major
        let mut psi = vec![C64::new(1.0, 0.0)];
        let mut rows = 1usize;
        for site in &self.sites {
            let (l, r) = (site.shape()[0], site.shape()[2]);
            psi = matmul_raw(&psi, site.data(), rows, l, 2 * r);
            rows *= 2;
        }
        Ok(psi)
    }

    fn check_norm(&self) -> Result<()> {
        let nrm = self.norm();
        if nrm.is_nan() || nrm < ZERO_NORM {
            return Err(MpsError::ZeroNorm(nrm));
        }
        Ok(())
    }

    /// Makes site `i` a left isometry and pushes the remainder into site
    /// `i + 1`.
    fn shift_right(&mut self, i: usize) -> Result<()> {
        let site = &self.sites[i];
        let (l, r) = (site.shape()[0], site.shape()[2]);
        let m = site.reshape(&[l * 2, r])?;
        let dec = svd(&m, Truncation::NONE)?;
        let k = dec.rank();
        let mut rest = dec.vdag.into_data();
        for (row, &s) in rest.chunks_exact_mut(r).zip(&dec.s) {
            row.iter_mut().for_each(|x| *x *= s);
        }
        self.sites[i] = dec.u.into_reshaped(&[l, 2, k])?;
        let next = &self.sites[i + 1];
        let nr = next.shape()[2];
        let merged = matmul_raw(&rest, next.data(), k, r, 2 * nr);
        self.sites[i + 1] = DenseTensor::new(vec![k, 2, nr], merged)?;
        self.bond_dims[i + 1] = k;
        Ok(())
    }

    /// Makes site `i` a right isometry and pushes the remainder into site
    /// `i - 1`.
    fn shift_left(&mut self, i: usize) -> Result<()> {
        let site = &self.sites[i];
        let (l, r) = (site.shape()[0], site.shape()[2]);
        let m = site.reshape(&[l, 2 * r])?;
        let dec = svd(&m, Truncation::NONE)?;
        let k = dec.rank();
        let mut us = dec.u.into_data();
        for row in us.chunks_exact_mut(k) {
            for (x, &s) in row.iter_mut().zip(&dec.s) {
                *x *= s;
            }
        }
        self.sites[i] = dec.vdag.into_reshaped(&[k, 2, r])?;
        let prev = &self.sites[i - 1];
        let pl = prev.shape()[0];
        let merged = matmul_raw(prev.data(), &us, pl * 2, l, k);
        self.sites[i - 1] = DenseTensor::new(vec![pl, 2, k], merged)?;
        self.bond_dims[i] = k;
        Ok(())
    }

    /// Left-canonical form: every site but the last is a left isometry.
    pub fn left_canonicalize(&mut self) -> Result<()> {
        self.canonicalize_to(self.n_qubits() - 1)
    }

    /// Right-canonical form: every site but the first is a right isometry.
    pub fn right_canonicalize(&mut self) -> Result<()> {
        self.canonicalize_to(0)
    }

    /// Mixed-canonical form centered on `center`: sites to its left are left
    /// isometries, sites to its right are right isometries. Never truncates.
    pub fn canonicalize_to(&mut self, center: usize) -> Result<()> {
        self.check_qubit(center)?;
        self.check_norm()?;
        for i in 0..center {
            self.shift_right(i)?;
        }
        for i in (center + 1..self.n_qubits()).rev() {
            self.shift_left(i)?;
        }
        self.ortho_center = Some(center);
        Ok(())
    }

    /// Largest `|A^dagger A - I|` entry over left-isometric sites `0..upto`.
    pub fn left_isometry_error(&self, upto: usize) -> f64 {
        self.sites[..upto]
            .iter()
            .map(|s| {
                let (l, r) = (s.shape()[0], s.shape()[2]);
                gram_error(s.data(), l * 2, r, false)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|B B^dagger - I|` entry over right-isometric sites `from..n`.
    pub fn right_isometry_error(&self, from: usize) -> f64 {
        self.sites[from..]
            .iter()
            .map(|s| {
                let (l, r) = (s.shape()[0], s.shape()[2]);
                gram_error(s.data(), l, 2 * r, true)
            })
            .fold(0.0, f64::max)
    }
}

/// `A[:, phys, :]` as a row-major `(D_left x D_right)` buffer.
pub(crate) fn phys_slice(site: &DenseTensor, phys: usize) -> Vec<C64> {
    let (l, r) = (site.shape()[0], site.shape()[2]);
    let d = site.data();
    let mut out = Vec::with_capacity(l * r);
    for a in 0..l {
        let base = (a * 2 + phys) * r;
        out.extend_from_slice(&d[base..base + r]);
    }
    out
}

/// Deviation of `A^dagger A` (columns) or `A A^dagger` (rows) from identity
/// for a row-major `rows x cols` matrix.
fn gram_error(a: &[C64], rows: usize, cols: usize, row_wise: bool) -> f64 {
    let mut worst = 0.0f64;
    if row_wise {
        for i in 0..rows {
            for j in 0..rows {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..cols {
                    acc += a[i * cols + k] * a[j * cols + k].conj();
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
    } else {
        for i in 0..cols {
            for j in 0..cols {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..rows {
                    acc += a[k * cols + i].conj() * a[k * cols + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
    }
    worst
}
