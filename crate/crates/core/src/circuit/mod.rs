//! Circuit intermediate representation: primitive operations as parsed from
//! OpenQASM, gate fusion into 1-/2-qubit blocks, SWAP-chain lowering of
//! non-local gates, and layer planning.

pub mod fuse;
pub mod gates;
pub mod layer;
pub mod qasm;

use std::fmt;

use thiserror::Error;

use crate::tensor::DenseTensor;

pub use fuse::{decompose_nonlocal, fuse_circuit, FusedGate, GateQubits};
pub use layer::{layerize, LayerPlan};
pub use qasm::{parse_qasm, parse_qasm_with, ParseOptions, QasmError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("two-qubit gate on repeated qubit {0}")]
    RepeatedQubit(usize),
    #[error("gate {gate} expects {expected} qubit(s), got {got}")]
    Arity {
        gate: String,
        expected: usize,
        got: usize,
    },
    #[error("gate {gate} expects {expected} parameter(s), got {got}")]
    ParamCount {
        gate: String,
        expected: usize,
        got: usize,
    },
    #[error("custom unitary must be a unitary 4x4 matrix")]
    BadUnitary,
    #[error("non-local gate on qubits ({0}, {1}) cannot be layered; lower it first")]
    NonLocal(usize, usize),
    #[error("circuit must have at least one qubit")]
    Empty,
}

/// Primitive gate names understood by the parser.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Id,
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    U1,
    U2,
    U3,
    Cx,
    Cz,
    Swap,
    /// An explicit 4x4 unitary supplied out of band (brickwork sidecar).
    Unitary2(Box<DenseTensor>),
}

impl Gate {
    pub fn from_name(name: &str) -> Option<Gate> {
        Some(match name {
            "id" => Gate::Id,
            "h" => Gate::H,
            "x" => Gate::X,
            "y" => Gate::Y,
            "z" => Gate::Z,
            "s" => Gate::S,
            "sdg" => Gate::Sdg,
            "t" => Gate::T,
            "tdg" => Gate::Tdg,
            "rx" => Gate::Rx,
            "ry" => Gate::Ry,
            "rz" => Gate::Rz,
            "u1" => Gate::U1,
            "u2" => Gate::U2,
            "u3" | "U" => Gate::U3,
            "cx" | "CX" => Gate::Cx,
            "cz" => Gate::Cz,
            "swap" => Gate::Swap,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Id => "id",
            Gate::H => "h",
            Gate::X => "x",
            Gate::Y => "y",
            Gate::Z => "z",
            Gate::S => "s",
            Gate::Sdg => "sdg",
            Gate::T => "t",
            Gate::Tdg => "tdg",
            Gate::Rx => "rx",
            Gate::Ry => "ry",
            Gate::Rz => "rz",
            Gate::U1 => "u1",
            Gate::U2 => "u2",
            Gate::U3 => "u3",
            Gate::Cx => "cx",
            Gate::Cz => "cz",
            Gate::Swap => "swap",
            Gate::Unitary2(_) => "unitary2",
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            Gate::Cx | Gate::Cz | Gate::Swap | Gate::Unitary2(_) => 2,
            _ => 1,
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Gate::Rx | Gate::Ry | Gate::Rz | Gate::U1 => 1,
            Gate::U2 => 2,
            Gate::U3 => 3,
            _ => 0,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One primitive operation: gate, qubit arguments (in argument order) and
/// real parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Op {
    pub gate: Gate,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

impl Op {
    /// Unitary matrix in argument order (first qubit most significant).
    pub fn matrix(&self) -> DenseTensor {
        let p = &self.params;
        match &self.gate {
            Gate::Id => gates::identity(),
            Gate::H => gates::h(),
            Gate::X => gates::x(),
            Gate::Y => gates::y(),
            Gate::Z => gates::z(),
            Gate::S => gates::s(),
            Gate::Sdg => gates::sdg(),
            Gate::T => gates::t(),
            Gate::Tdg => gates::tdg(),
            Gate::Rx => gates::rx(p[0]),
            Gate::Ry => gates::ry(p[0]),
            Gate::Rz => gates::rz(p[0]),
            Gate::U1 => gates::phase(p[0]),
            Gate::U2 => gates::u2(p[0], p[1]),
            Gate::U3 => gates::u3(p[0], p[1], p[2]),
            Gate::Cx => gates::cx(),
            Gate::Cz => gates::cz(),
            Gate::Swap => gates::swap(),
            Gate::Unitary2(m) => (**m).clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<Op>,
    measured: Vec<bool>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::Empty);
        }
        Ok(Self {
            n_qubits,
            ops: Vec::new(),
            measured: vec![false; n_qubits],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    /// True when every qubit is measured at the end of the circuit.
    pub fn has_measure_all(&self) -> bool {
        self.measured.iter().all(|&m| m)
    }

    pub fn is_measured(&self, qubit: usize) -> bool {
        self.measured[qubit]
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), CircuitError> {
        if qubit >= self.n_qubits {
            return Err(CircuitError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn push(&mut self, gate: Gate, qubits: &[usize], params: &[f64]) -> Result<(), CircuitError> {
        if qubits.len() != gate.num_qubits() {
            return Err(CircuitError::Arity {
                gate: gate.name().into(),
                expected: gate.num_qubits(),
                got: qubits.len(),
            });
        }
        if params.len() != gate.num_params() {
            return Err(CircuitError::ParamCount {
                gate: gate.name().into(),
                expected: gate.num_params(),
                got: params.len(),
            });
        }
        for &q in qubits {
            self.check_qubit(q)?;
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(CircuitError::RepeatedQubit(qubits[0]));
        }
        if let Gate::Unitary2(m) = &gate {
            if m.shape() != [4, 4] || gates::unitarity_error(m) > 1e-10 {
                return Err(CircuitError::BadUnitary);
            }
        }
        self.ops.push(Op {
            gate,
            qubits: qubits.to_vec(),
            params: params.to_vec(),
        });
        Ok(())
    }

    pub fn measure(&mut self, qubit: usize) -> Result<(), CircuitError> {
        self.check_qubit(qubit)?;
        self.measured[qubit] = true;
        Ok(())
    }

    pub fn measure_all(&mut self) {
        self.measured.iter_mut().for_each(|m| *m = true);
    }

    pub fn h(&mut self, q: usize) -> Result<(), CircuitError> {
        self.push(Gate::H, &[q], &[])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<(), CircuitError> {
        self.push(Gate::Cx, &[control, target], &[])
    }

    pub fn u3(&mut self, q: usize, theta: f64, phi: f64, lambda: f64) -> Result<(), CircuitError> {
        self.push(Gate::U3, &[q], &[theta, phi, lambda])
    }

    pub fn unitary2(&mut self, a: usize, b: usize, m: DenseTensor) -> Result<(), CircuitError> {
        self.push(Gate::Unitary2(Box::new(m)), &[a, b], &[])
    }

    pub fn two_qubit_count(&self) -> usize {
        self.ops.iter().filter(|o| o.qubits.len() == 2).count()
    }
}
