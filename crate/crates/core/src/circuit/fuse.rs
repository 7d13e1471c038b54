//! Gate fusion and non-local lowering.

use super::{gates, Circuit};
use crate::tensor::{matmul, DenseTensor};

/// Qubits acted on by a fused block. Two-qubit blocks are stored with
/// `low < high`; `reversed` records that the block was created from a gate
/// whose first argument was the higher qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateQubits {
    One(usize),
    Two { low: usize, high: usize, reversed: bool },
}

/// A 1- or 2-qubit unitary block. For two-qubit blocks the matrix is indexed
/// `2 * b_low + b_high`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedGate {
    qubits: GateQubits,
    matrix: DenseTensor,
}

impl FusedGate {
    pub fn one(qubit: usize, matrix: DenseTensor) -> Self {
        assert_eq!(matrix.shape(), [2, 2], "one-qubit block must be 2x2");
        Self {
            qubits: GateQubits::One(qubit),
            matrix,
        }
    }

    /// Two-qubit block from a matrix in argument order `(a, b)`, `a` being the
    /// more significant bit.
    pub fn two(a: usize, b: usize, matrix: DenseTensor) -> Self {
        assert_eq!(matrix.shape(), [4, 4], "two-qubit block must be 4x4");
        assert_ne!(a, b, "two-qubit block on a single qubit");
        if a < b {
            Self {
                qubits: GateQubits::Two { low: a, high: b, reversed: false },
                matrix,
            }
        } else {
            Self {
                qubits: GateQubits::Two { low: b, high: a, reversed: true },
                matrix: gates::swap_conjugate(&matrix),
            }
        }
    }

    pub fn qubits(&self) -> GateQubits {
        self.qubits
    }

    pub fn matrix(&self) -> &DenseTensor {
        &self.matrix
    }

    pub fn arity(&self) -> usize {
        match self.qubits {
            GateQubits::One(_) => 1,
            GateQubits::Two { .. } => 2,
        }
    }

    /// Lowest and highest qubit touched.
    pub fn span(&self) -> (usize, usize) {
        match self.qubits {
            GateQubits::One(q) => (q, q),
            GateQubits::Two { low, high, .. } => (low, high),
        }
    }

    pub fn qubit_list(&self) -> Vec<usize> {
        match self.qubits {
            GateQubits::One(q) => vec![q],
            GateQubits::Two { low, high, .. } => vec![low, high],
        }
    }

    pub fn touches(&self, q: usize) -> bool {
        match self.qubits {
            GateQubits::One(p) => p == q,
            GateQubits::Two { low, high, .. } => low == q || high == q,
        }
    }

    /// True for 1-qubit blocks and nearest-neighbour 2-qubit blocks.
    pub fn is_local(&self) -> bool {
        let (lo, hi) = self.span();
        hi - lo <= 1
    }

    fn on_pair(&self, a: usize, b: usize) -> bool {
        matches!(self.qubits, GateQubits::Two { low, high, .. } if (low, high) == (a.min(b), a.max(b)))
    }
}

fn mul(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    matmul(a, b).expect("gate shapes agree")
}

/// `g` acting on qubit `q` of the pair `(low, high)`, as a 4x4 matrix.
fn embed_1q(g: &DenseTensor, q: usize, low: usize) -> DenseTensor {
    if q == low {
        gates::kron(g, &gates::identity())
    } else {
        gates::kron(&gates::identity(), g)
    }
}

/// Compresses a circuit into 1- and 2-qubit unitary blocks in a single
/// left-to-right pass:
///
/// * consecutive 1-qubit gates on a qubit are multiplied;
/// * a 1-qubit gate is absorbed into a neighbouring 2-qubit block on that
///   qubit when nothing in between touches the qubit;
/// * consecutive 2-qubit gates on the same unordered pair are multiplied.
///
/// No gate is moved past another gate sharing a qubit, so the ordered product
/// of the output equals the circuit's unitary.
pub fn fuse_circuit(c: &Circuit) -> Vec<FusedGate> {
    let n = c.n_qubits();
    let mut blocks: Vec<Option<FusedGate>> = Vec::with_capacity(c.ops().len());
    // index of the last block touching each qubit
    let mut last: Vec<Option<usize>> = vec![None; n];

    for op in c.ops() {
        let g = op.matrix();
        match op.qubits[..] {
            [q] => match last[q] {
                Some(k) => {
                    let block = blocks[k].as_mut().expect("live block");
                    block.matrix = match block.qubits {
                        GateQubits::One(_) => mul(&g, &block.matrix),
                        GateQubits::Two { low, .. } => mul(&embed_1q(&g, q, low), &block.matrix),
                    };
                }
                None => {
                    last[q] = Some(blocks.len());
                    blocks.push(Some(FusedGate::one(q, g)));
                }
            },
            [a, b] => {
                let mut gate = FusedGate::two(a, b, g);
                let (low, high) = gate.span();
                if let (Some(ka), Some(kb)) = (last[a], last[b]) {
                    if ka == kb && blocks[ka].as_ref().is_some_and(|blk| blk.on_pair(a, b)) {
                        let block = blocks[ka].as_mut().expect("live block");
                        block.matrix = mul(&gate.matrix, &block.matrix);
                        continue;
                    }
                }
                // pull in trailing 1-qubit blocks on either qubit
                for q in [low, high] {
                    if let Some(k) = last[q] {
                        if blocks[k].as_ref().is_some_and(|blk| blk.arity() == 1) {
                            let single = blocks[k].take().expect("live block");
                            gate.matrix = mul(&gate.matrix, &embed_1q(&single.matrix, q, low));
                        }
                    }
                }
                last[low] = Some(blocks.len());
                last[high] = Some(blocks.len());
                blocks.push(Some(gate));
            }
            _ => unreachable!("ops have one or two qubits"),
        }
    }
    blocks.into_iter().flatten().collect()
}

/// Replaces every non-adjacent 2-qubit block on `(a, b)` by SWAPs carrying
/// `a` to `b - 1`, the block on `(b - 1, b)`, and the mirrored SWAPs.
pub fn decompose_nonlocal(gates_in: &[FusedGate]) -> Vec<FusedGate> {
    let mut out = Vec::with_capacity(gates_in.len());
    for g in gates_in {
        match g.qubits {
            GateQubits::Two { low, high, reversed } if high - low > 1 => {
                for q in low..high - 1 {
                    out.push(FusedGate::two(q, q + 1, gates::swap()));
                }
                out.push(FusedGate {
                    qubits: GateQubits::Two { low: high - 1, high, reversed },
                    matrix: g.matrix.clone(),
                });
                for q in (low..high - 1).rev() {
                    out.push(FusedGate::two(q, q + 1, gates::swap()));
                }
            }
            _ => out.push(g.clone()),
        }
    }
    out
}
