#![allow(dead_code)]

use mpsim::circuit::fuse_circuit;
use mpsim::generators::random_circuit;
use mpsim::{execute_serial, sv_run, MpsState, NonlocalMethod, TruncationPolicy, C64};
use rand::Rng;

/// Max entrywise deviation after rotating `b` onto the global phase of `a`.
pub fn phase_aligned_dev(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let inner: C64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum();
    let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { C64::new(1.0, 0.0) };
    a.iter().zip(b).map(|(x, y)| (x - y * phase).norm()).fold(0.0, f64::max)
}

pub fn max_dev(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// |<a|b>|^2 for normalized vectors.
pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    let inner: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    inner.norm_sqr()
}

/// Random entangled MPS built from a random circuit, and its exact amplitudes.
pub fn random_state(n: usize, ops: usize, rng: &mut impl Rng) -> (MpsState, Vec<C64>) {
    let c = random_circuit(n, ops, rng);
    let mut s = MpsState::init_zero(n).unwrap();
    execute_serial(&mut s, &fuse_circuit(&c), &TruncationPolicy::UNBOUNDED, NonlocalMethod::Swap).unwrap();
    let sv = sv_run(&c).unwrap().into_amplitudes();
    (s, sv)
}
