//! Matrix-product-state quantum circuit simulation.
//!
//! The pipeline is: parse OpenQASM ([`circuit::parse_qasm`]), fuse into 1- and
//! 2-qubit blocks ([`circuit::fuse_circuit`]), optionally lower non-local
//! blocks to SWAP chains and plan layers ([`circuit::decompose_nonlocal`],
//! [`circuit::layerize`]), execute on an [`MpsState`] serially or with a
//! work-stealing pool ([`exec`]), and draw shots with [`sampler`].
//!
//! Conventions: qubit 0 is the leftmost MPS site and the most significant bit
//! of statevector indices; bitstrings list qubit 0 first. Two-qubit matrices
//! are indexed `2 * b_first + b_second`.

pub mod apply;
pub mod circuit;
pub mod exec;
pub mod generators;
pub mod mps;
pub mod sampler;
pub mod statevector;
pub mod svd;
pub mod tensor;

pub use num_complex::Complex64 as C64;

pub use apply::{ApplyReport, NonlocalMethod, PolicyError, TruncationPolicy};
pub use circuit::{Circuit, FusedGate, LayerPlan, QasmError};
pub use exec::{execute_parallel, execute_serial, ExecError, ExecStats, LayerStats};
pub use mps::{MpsError, MpsState};
pub use sampler::{sample, SampleError, Sampler, ShotResult};
pub use statevector::{sv_run, sv_run_fused, StateVector, StateVectorError};
pub use svd::{svd, SvdResult, Truncation};
pub use tensor::{contract, DenseTensor, TensorError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Qasm(#[from] QasmError),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    StateVector(#[from] StateVectorError),
}
