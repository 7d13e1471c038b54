//! Dense complex tensors stored row-major (last index fastest).
//!
//! Every higher-level object in the simulator (MPS sites, gate matrices,
//! merged two-site blocks) is a [`DenseTensor`]. Contraction is carried out as
//! permute -> reshape -> matrix multiply, so the only hot loop here is
//! [`matmul`].

use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("data length {got} does not match shape {shape:?} (expected {expected})")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("zero extent in shape {0:?}")]
    ZeroExtent(Vec<usize>),
    #[error("extent mismatch on contracted pair ({axis_a}, {axis_b}): {extent_a} != {extent_b}")]
    ExtentMismatch {
        axis_a: usize,
        axis_b: usize,
        extent_a: usize,
        extent_b: usize,
    },
    #[error("axis pair ({axis_a}, {axis_b}) out of range for ranks ({rank_a}, {rank_b})")]
    AxisOutOfRange {
        axis_a: usize,
        axis_b: usize,
        rank_a: usize,
        rank_b: usize,
    },
    #[error("axis pair ({axis_a}, {axis_b}) reuses an already contracted axis")]
    DuplicateAxis { axis_a: usize, axis_b: usize },
    #[error("invalid permutation {order:?} for rank {rank}")]
    InvalidPermutation { order: Vec<usize>, rank: usize },
    #[error("cannot reshape {from:?} into {to:?}: element counts differ")]
    ReshapeMismatch { from: Vec<usize>, to: Vec<usize> },
    #[error("expected a rank-2 tensor, got rank {0}")]
    NotMatrix(usize),
    #[error("inner dimensions differ: {0} != {1}")]
    InnerMismatch(usize, usize),
    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },
    #[error("non-finite entry encountered in SVD input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Arbitrary-rank dense tensor of double-precision complex numbers.
#[derive(Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl fmt::Debug for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("shape", &self.shape)
            .field("len", &self.data.len())
            .finish()
    }
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(TensorError::ZeroExtent(shape));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![C64::new(0.0, 0.0); len])
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut t = Self::zeros(vec![n, n])?;
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        Ok(t)
    }

    /// Builds a rank-2 tensor from row-major entries.
    pub fn matrix(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Builds a rank-2 tensor from real row-major entries.
    pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::matrix(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    /// Flat offset of a multi-index. Panics if the index is out of bounds.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| {
                assert!(i < d, "index {i} out of bounds for extent {d}");
                acc * d + i
            })
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn scale(&mut self, alpha: C64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Materialized axis permutation: axis `k` of the result is axis
    /// `order[k]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        let valid = order.len() == rank
            && order.iter().all(|&a| a < rank && !std::mem::replace(&mut seen[a], true));
        if !valid {
            return Err(TensorError::InvalidPermutation {
                order: order.to_vec(),
                rank,
            });
        }
        if order.iter().enumerate().all(|(i, &a)| i == a) {
            return Ok(self.clone());
        }
        let old_strides = self.strides();
        let new_shape: Vec<usize> = order.iter().map(|&a| self.shape[a]).collect();
        let src_strides: Vec<usize> = order.iter().map(|&a| old_strides[a]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; rank];
        let mut src = 0usize;
        let last = rank - 1;
        let inner = new_shape[last];
        let inner_stride = src_strides[last];
        loop {
            for k in 0..inner {
                data.push(self.data[src + k * inner_stride]);
            }
            // odometer over all axes but the last
            let mut ax = last;
            loop {
                if ax == 0 {
                    return Ok(Self {
                        shape: new_shape,
                        data,
                    });
                }
                ax -= 1;
                idx[ax] += 1;
                src += src_strides[ax];
                if idx[ax] < new_shape[ax] {
                    break;
                }
                src -= src_strides[ax] * new_shape[ax];
                idx[ax] = 0;
            }
        }
    }

    /// Same data, new shape.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Self> {
        self.clone().into_reshaped(new_shape)
    }

    pub fn into_reshaped(self, new_shape: &[usize]) -> Result<Self> {
        let n: usize = new_shape.iter().product();
        if n != self.data.len() || new_shape.contains(&0) {
            return Err(TensorError::ReshapeMismatch {
                from: self.shape,
                to: new_shape.to_vec(),
            });
        }
        Ok(Self {
            shape: new_shape.to_vec(),
            data: self.data,
        })
    }

    /// Conjugate transpose of a rank-2 tensor.
    pub fn adjoint(&self) -> Result<Self> {
        let (r, c) = self.matrix_dims()?;
        let mut data = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                data.push(self.data[i * c + j].conj());
            }
        }
        Ok(Self {
            shape: vec![c, r],
            data,
        })
    }

    pub fn matrix_dims(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            &[r, c] => Ok((r, c)),
            _ => Err(TensorError::NotMatrix(self.rank())),
        }
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Row-major `(m x k) * (k x n)` product into a fresh buffer.
pub(crate) fn matmul_raw(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    for (a_row, out_row) in a.chunks_exact(k).zip(out.chunks_exact_mut(n)) {
        for (&aik, b_row) in a_row.iter().zip(b.chunks_exact(n)) {
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// Matrix product of two rank-2 tensors.
pub fn matmul(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let (m, k) = a.matrix_dims()?;
    let (k2, n) = b.matrix_dims()?;
    if k != k2 {
        return Err(TensorError::InnerMismatch(k, k2));
    }
    Ok(DenseTensor {
        shape: vec![m, n],
        data: matmul_raw(&a.data, &b.data, m, k, n),
    })
}

/// Einstein summation over the listed `(axis of a, axis of b)` pairs.
///
/// Result axes are the uncontracted axes of `a` in order, followed by the
/// uncontracted axes of `b` in order.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(axis_a, axis_b) in pairs {
        if axis_a >= ra || axis_b >= rb {
            return Err(TensorError::AxisOutOfRange {
                axis_a,
                axis_b,
                rank_a: ra,
                rank_b: rb,
            });
        }
        if used_a[axis_a] || used_b[axis_b] {
            return Err(TensorError::DuplicateAxis { axis_a, axis_b });
        }
        used_a[axis_a] = true;
        used_b[axis_b] = true;
        let (extent_a, extent_b) = (a.shape[axis_a], b.shape[axis_b]);
        if extent_a != extent_b {
            return Err(TensorError::ExtentMismatch {
                axis_a,
                axis_b,
                extent_a,
                extent_b,
            });
        }
    }
    let free_a: Vec<usize> = (0..ra).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&i| !used_b[i]).collect();

    let order_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let order_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();

    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();

    let pa = a.permute(&order_a)?;
    let pb = b.permute(&order_b)?;
    let data = matmul_raw(&pa.data, &pb.data, m, k, n);

    let shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&i| b.shape[i]))
        .collect();
    Ok(DenseTensor { shape, data })
}
