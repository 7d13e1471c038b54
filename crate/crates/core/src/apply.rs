//! Gate application on an [`MpsState`].
//!
//! One-qubit gates act on a single site. Local two-qubit gates merge the two
//! sites, apply the gate on both physical legs and split the result by a
//! truncated SVD: the left singular vectors become the left site and the
//! singular values are folded into the right site. Non-local gates either
//! route through a SWAP chain or carry a propagating bond from one end of the
//! gate to the other.
//!
//! The kernels ([`apply_1q_site`], [`apply_2q_sites`]) only touch the tensors
//! they are handed, which is what lets the parallel executor run gates on
//! disjoint spans concurrently.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::circuit::{gates, FusedGate, GateQubits};
use crate::mps::{MpsError, MpsState};
use crate::svd::{svd, Truncation};
use crate::tensor::{contract, DenseTensor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("max_bond must be at least 1")]
    ZeroBond,
    #[error("cutoff must lie in [0, 1), got {0}")]
    Cutoff(f64),
}

/// Bond-dimension cap and relative discarded-weight cutoff applied at every
/// gate SVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    max_bond: Option<usize>,
    cutoff: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::UNBOUNDED
    }
}

impl TruncationPolicy {
    pub const UNBOUNDED: TruncationPolicy = TruncationPolicy {
        max_bond: None,
        cutoff: 0.0,
    };

    pub fn new(max_bond: Option<usize>, cutoff: f64) -> Result<Self, PolicyError> {
        if max_bond == Some(0) {
            return Err(PolicyError::ZeroBond);
        }
        if !(0.0..1.0).contains(&cutoff) {
            return Err(PolicyError::Cutoff(cutoff));
        }
        Ok(Self { max_bond, cutoff })
    }

    pub fn max_bond(&self) -> Option<usize> {
        self.max_bond
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn truncation(&self) -> Truncation {
        Truncation {
            max_rank: self.max_bond,
            cutoff: self.cutoff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplyReport {
    /// Sum of the discarded weights of every SVD performed for the gate.
    pub discarded_weight: f64,
    /// Largest bond dimension inside the gate's span afterwards.
    pub new_bond: usize,
    /// Number of site-tensor SVDs performed.
    pub svd_count: usize,
}

/// Strategy for two-qubit gates on non-adjacent qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlocalMethod {
    #[default]
    Swap,
    BondProp,
}

fn check_gate_shape(m: &DenseTensor, dim: usize) -> Result<(), MpsError> {
    if m.shape() != [dim, dim] {
        return Err(MpsError::GateShape(m.shape().to_vec()));
    }
    Ok(())
}

/// Contracts a 2x2 gate into the physical leg of `site`.
pub fn apply_1q_site(site: &mut DenseTensor, m: &DenseTensor) {
    let (l, r) = (site.shape()[0], site.shape()[2]);
    let g = m.data();
    let d = site.data_mut();
    for a in 0..l {
        let base = a * 2 * r;
        for k in 0..r {
            let x0 = d[base + k];
            let x1 = d[base + r + k];
            d[base + k] = g[0] * x0 + g[1] * x1;
            d[base + r + k] = g[2] * x0 + g[3] * x1;
        }
    }
}

/// Splits a `(D_l * 2) x (2 * D_r)` block into two sites by truncated SVD,
/// folding the (renormalized) singular values into the right site.
fn split_block(
    block: DenseTensor,
    l: usize,
    r: usize,
    policy: &TruncationPolicy,
) -> Result<(DenseTensor, DenseTensor, f64), MpsError> {
    let dec = svd(&block, policy.truncation())?;
    let k = dec.rank();
    let mut scale = 1.0;
    if dec.discarded_weight > 0.0 && dec.discarded_weight < 1.0 {
        scale = 1.0 / (1.0 - dec.discarded_weight).sqrt();
    }
    let mut right = dec.vdag.into_data();
    for (row, &s) in right.chunks_exact_mut(2 * r).zip(&dec.s) {
        let f = s * scale;
        row.iter_mut().for_each(|x| *x *= f);
    }
    Ok((
        dec.u.into_reshaped(&[l, 2, k])?,
        DenseTensor::new(vec![k, 2, r], right)?,
        dec.discarded_weight,
    ))
}

/// Applies a 4x4 gate (indexed `2 * b_left + b_right`) to two neighbouring
/// sites and re-splits them. Returns the discarded weight.
pub fn apply_2q_sites(
    left: &mut DenseTensor,
    right: &mut DenseTensor,
    m: &DenseTensor,
    policy: &TruncationPolicy,
) -> Result<f64, MpsError> {
    let (l, r) = (left.shape()[0], right.shape()[2]);
    // theta[l, a, b, r]
    let theta = contract(left, right, &[(2, 0)])?;
    let g = m.data();
    let src = theta.data();
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for a in 0..l {
        let base = a * 4 * r;
        for k in 0..r {
            let x = [
                src[base + k],
                src[base + r + k],
                src[base + 2 * r + k],
                src[base + 3 * r + k],
            ];
            for row in 0..4 {
                let gr = &g[row * 4..row * 4 + 4];
                out[base + row * r + k] = gr[0] * x[0] + gr[1] * x[1] + gr[2] * x[2] + gr[3] * x[3];
            }
        }
    }
    let block = DenseTensor::matrix(l * 2, 2 * r, out)?;
    let (new_left, new_right, discarded) = split_block(block, l, r, policy)?;
    *left = new_left;
    *right = new_right;
    Ok(discarded)
}

impl MpsState {
    fn bonds_in(&self, lo: usize, hi: usize) -> usize {
        self.bond_dims[lo..=hi + 1].iter().copied().max().unwrap_or(1)
    }

    fn two_sites_mut(&mut self, q: usize) -> (&mut DenseTensor, &mut DenseTensor) {
        let (a, b) = self.sites.split_at_mut(q + 1);
        (&mut a[q], &mut b[0])
    }

    pub fn apply_1q(&mut self, m: &DenseTensor, q: usize) -> Result<ApplyReport, MpsError> {
        self.check_qubit(q)?;
        check_gate_shape(m, 2)?;
        apply_1q_site(&mut self.sites[q], m);
        Ok(ApplyReport {
            discarded_weight: 0.0,
            new_bond: self.bonds_in(q, q),
            svd_count: 0,
        })
    }

    /// Gate on `(q, q + 1)`, matrix indexed `2 * b_q + b_{q+1}`.
    pub fn apply_2q_local(
        &mut self,
        m: &DenseTensor,
        q: usize,
        policy: &TruncationPolicy,
    ) -> Result<ApplyReport, MpsError> {
        self.check_qubit(q)?;
        if q + 1 >= self.n_qubits() {
            return Err(MpsError::QubitOutOfRange {
                qubit: q + 1,
                n_qubits: self.n_qubits(),
            });
        }
        check_gate_shape(m, 4)?;
        let (left, right) = self.two_sites_mut(q);
        let discarded_weight = apply_2q_sites(left, right, m, policy)?;
        self.refresh_bonds(q, q + 1);
        self.ortho_center = None;
        Ok(ApplyReport {
            discarded_weight,
            new_bond: self.bond_dims[q + 1],
            svd_count: 1,
        })
    }

    /// Orders a two-qubit gate given in argument order `(q0, q1)` as
    /// `(low, high)`.
    fn normalize_pair(&self, m: &DenseTensor, q0: usize, q1: usize) -> Result<(usize, usize, DenseTensor), MpsError> {
        self.check_qubit(q0)?;
        self.check_qubit(q1)?;
        check_gate_shape(m, 4)?;
        if q0 == q1 {
            return Err(MpsError::RepeatedQubit(q0));
        }
        Ok(if q0 < q1 {
            (q0, q1, m.clone())
        } else {
            (q1, q0, gates::swap_conjugate(m))
        })
    }

    /// Gate on arbitrary `(q0, q1)` routed through nearest-neighbour SWAPs:
    /// the low qubit is carried next to the high one, the gate is applied
    /// locally, and the SWAPs are undone.
    pub fn apply_2q_swap(
        &mut self,
        m: &DenseTensor,
        q0: usize,
        q1: usize,
        policy: &TruncationPolicy,
    ) -> Result<ApplyReport, MpsError> {
        let (lo, hi, m) = self.normalize_pair(m, q0, q1)?;
        let swap = gates::swap();
        let mut report = ApplyReport {
            discarded_weight: 0.0,
            new_bond: 1,
            svd_count: 0,
        };
        let mut step = |state: &mut MpsState, g: &DenseTensor, q: usize| -> Result<(), MpsError> {
            let r = state.apply_2q_local(g, q, policy)?;
            report.discarded_weight += r.discarded_weight;
            report.svd_count += r.svd_count;
            Ok(())
        };
        for q in lo..hi - 1 {
            step(self, &swap, q)?;
        }
        step(self, &m, hi - 1)?;
        for q in (lo..hi - 1).rev() {
            step(self, &swap, q)?;
        }
        report.new_bond = self.bonds_in(lo, hi);
        Ok(report)
    }

    /// Gate on arbitrary `(q0, q1)` by bond propagation.
    ///
    /// The gate is split by SVD into a low-qubit factor and a high-qubit
    /// factor joined by a gate bond. The low factor is contracted into the
    /// low site, and the gate bond is then carried rightwards through every
    /// intermediate site (one SVD per site) until the high factor can be
    /// contracted with the high site and the last pair decomposed. A gate of
    /// distance `d` costs exactly `d` site SVDs.
    pub fn apply_2q_bondprop(
        &mut self,
        m: &DenseTensor,
        q0: usize,
        q1: usize,
        policy: &TruncationPolicy,
    ) -> Result<ApplyReport, MpsError> {
        let (lo, hi, m) = self.normalize_pair(m, q0, q1)?;

        // m4[c', t', c, t] -> gate_mat[(c', c), (t', t)]
        let gate_mat = m
            .reshape(&[2, 2, 2, 2])?
            .permute(&[0, 2, 1, 3])?
            .into_reshaped(&[4, 4])?;
        let gdec = svd(&gate_mat, Truncation::NONE)?;
        let kg = gdec.rank();
        // low[c', c, p]
        let low = gdec.u.into_reshaped(&[2, 2, kg])?;
        // high[p, t', t] with singular values folded in
        let mut high = gdec.vdag.into_data();
        for (row, &s) in high.chunks_exact_mut(4).zip(&gdec.s) {
            row.iter_mut().for_each(|x| *x *= s);
        }
        let high = DenseTensor::new(vec![kg, 2, 2], high)?;

        // cur[l, s, p, r]: leftmost unsettled site carrying the gate bond p
        let cur0 = contract(&self.sites[lo], &low, &[(1, 1)])?; // [l, r, c', p]
        let mut cur = cur0.permute(&[0, 2, 3, 1])?;

        let mut discarded = 0.0;
        let mut svd_count = 0;
        for j in lo + 1..hi {
            let l = cur.shape()[0];
            let x = contract(&cur, &self.sites[j], &[(3, 0)])?; // [l, s, p, s2, r2]
            let r2 = x.shape()[4];
            let cols = kg * 2 * r2;
            let dec = svd(&x.into_reshaped(&[l * 2, cols])?, policy.truncation())?;
            svd_count += 1;
            discarded += dec.discarded_weight;
            let chi = dec.rank();
            let scale = if dec.discarded_weight > 0.0 && dec.discarded_weight < 1.0 {
                1.0 / (1.0 - dec.discarded_weight).sqrt()
            } else {
                1.0
            };
            let mut carrier = dec.vdag.into_data();
            for (row, &s) in carrier.chunks_exact_mut(cols).zip(&dec.s) {
                let f = s * scale;
                row.iter_mut().for_each(|x| *x *= f);
            }
            self.sites[j - 1] = dec.u.into_reshaped(&[l, 2, chi])?;
            cur = DenseTensor::new(vec![chi, kg, 2, r2], carrier)?.permute(&[0, 2, 1, 3])?;
        }

        let l = cur.shape()[0];
        let y = contract(&cur, &self.sites[hi], &[(3, 0)])?; // [l, s, p, t, r']
        let y = contract(&y, &high, &[(2, 0), (3, 2)])?; // [l, s, r', t']
        let r = y.shape()[2];
        let block = y.permute(&[0, 1, 3, 2])?.into_reshaped(&[l * 2, 2 * r])?;
        let (left, right, dw) = split_block(block, l, r, policy)?;
        self.sites[hi - 1] = left;
        self.sites[hi] = right;
        discarded += dw;
        svd_count += 1;

        self.refresh_bonds(lo, hi);
        self.ortho_center = None;
        Ok(ApplyReport {
            discarded_weight: discarded,
            new_bond: self.bonds_in(lo, hi),
            svd_count,
        })
    }

    /// Applies a fused block, routing non-local pairs through `method`.
    pub fn apply_gate(
        &mut self,
        g: &FusedGate,
        policy: &TruncationPolicy,
        method: NonlocalMethod,
    ) -> Result<ApplyReport, MpsError> {
        match g.qubits() {
            GateQubits::One(q) => self.apply_1q(g.matrix(), q),
            GateQubits::Two { low, high, .. } if high == low + 1 => {
                self.apply_2q_local(g.matrix(), low, policy)
            }
            GateQubits::Two { low, high, .. } => match method {
                NonlocalMethod::Swap => self.apply_2q_swap(g.matrix(), low, high, policy),
                NonlocalMethod::BondProp => self.apply_2q_bondprop(g.matrix(), low, high, policy),
            },
        }
    }
}
