//! Perfect sampling of full-register measurement outcomes.
//!
//! The state is brought into right-canonical form once. Each shot then sweeps
//! left to right: the conditional distribution of qubit `i` follows from the
//! left environment of the bits already drawn and site `i` alone, one uniform
//! variate picks the bit, and the environment is projected onto it and
//! renormalized.
//!
//! Projected environments are memoized by bit prefix, so shots that share a
//! prefix reuse the work done by earlier shots.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mps::{phys_slice, MpsError, MpsState};
use crate::tensor::matmul_raw;

/// Allowed deviation of the input norm from one.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("state norm {0} is not 1 within {NORM_TOLERANCE:e}")]
    Unnormalized(f64),
    #[error("zero total probability at qubit {0}")]
    Degenerate(usize),
    #[error("shot count must be positive")]
    NoShots,
    #[error(transparent)]
    Mps(#[from] MpsError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotResult {
    /// Outcome bitstring (character `i` is qubit `i`) to count.
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SamplerStats {
    pub cache_hits: u64,
    pub cache_misses: u64,
    /// Largest `|P(0) + P(1) - 1|` seen at any site.
    pub max_normalization_error: f64,
}

/// Conditional distribution after a prefix together with the projected,
/// renormalized environments for both possible next bits.
#[derive(Debug, Clone)]
struct Branch {
    p0: f64,
    next: [Vec<C64>; 2],
}

#[derive(Debug, Clone)]
pub struct Sampler {
    state: MpsState,
    cache: HashMap<Vec<u8>, Branch>,
    memoize: bool,
    cache_cap: Option<usize>,
    stats: SamplerStats,
}

impl Sampler {
    /// Copies and canonicalizes `state` (left sweep, then right sweep).
    pub fn new(state: &MpsState) -> Result<Self, SampleError> {
        let norm = state.norm();
        if norm.is_nan() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(SampleError::Unnormalized(norm));
        }
        let mut state = state.clone();
        state.left_canonicalize()?;
        state.right_canonicalize()?;
        Ok(Self {
            state,
            cache: HashMap::new(),
            memoize: true,
            cache_cap: None,
            stats: SamplerStats::default(),
        })
    }

    pub fn with_memoization(mut self, on: bool) -> Self {
        self.memoize = on;
        self
    }

    /// Stop inserting once the cache holds `cap` prefixes.
    pub fn with_cache_cap(mut self, cap: Option<usize>) -> Self {
        self.cache_cap = cap;
        self
    }

    pub fn state(&self) -> &MpsState {
        &self.state
    }

    pub fn stats(&self) -> SamplerStats {
        self.stats
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    fn branch(&mut self, site: usize, env: &[C64]) -> Result<Branch, SampleError> {
        let a = &self.state.sites()[site];
        let (l, r) = (a.shape()[0], a.shape()[2]);
        let v0 = matmul_raw(env, &phys_slice(a, 0), 1, l, r);
        let v1 = matmul_raw(env, &phys_slice(a, 1), 1, l, r);
        let w0: f64 = v0.iter().map(C64::norm_sqr).sum();
        let w1: f64 = v1.iter().map(C64::norm_sqr).sum();
        let total = w0 + w1;
        self.stats.max_normalization_error = self.stats.max_normalization_error.max((total - 1.0).abs());
        if total.is_nan() || total <= 1e-300 {
            return Err(SampleError::Degenerate(site));
        }
        let project = |v: Vec<C64>, w: f64| -> Vec<C64> {
            if w > 0.0 {
                let s = 1.0 / w.sqrt();
                v.into_iter().map(|x| x * s).collect()
            } else {
                v
            }
        };
        Ok(Branch {
            p0: w0 / total,
            next: [project(v0, w0), project(v1, w1)],
        })
    }

    /// Draws one bitstring, consuming one variate per qubit.
    fn shot(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<u8>, SampleError> {
        let n = self.state.n_qubits();
        let mut bits = Vec::with_capacity(n);
        let mut env = vec![C64::new(1.0, 0.0)];
        for site in 0..n {
            let u: f64 = rng.random();
            let branch = if self.memoize {
                match self.cache.get(&bits) {
                    Some(b) => {
                        self.stats.cache_hits += 1;
                        b.clone()
                    }
                    None => {
                        self.stats.cache_misses += 1;
                        let b = self.branch(site, &env)?;
                        if self.cache_cap.is_none_or(|cap| self.cache.len() < cap) {
                            self.cache.insert(bits.clone(), b.clone());
                        }
                        b
                    }
                }
            } else {
                self.branch(site, &env)?
            };
            let bit = if u < branch.p0 { 0u8 } else { 1u8 };
            let [e0, e1] = branch.next;
            env = if bit == 0 { e0 } else { e1 };
            bits.push(bit);
        }
        Ok(bits)
    }

    pub fn sample(&mut self, shots: u64, seed: u64) -> Result<ShotResult, SampleError> {
        if shots == 0 {
            return Err(SampleError::NoShots);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let bits = self.shot(&mut rng)?;
            let key: String = bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(ShotResult { counts, shots, seed })
    }
}

/// Samples `shots` outcomes from `state` with memoization enabled.
pub fn sample(state: &MpsState, shots: u64, seed: u64) -> Result<ShotResult, SampleError> {
    Sampler::new(state)?.sample(shots, seed)
}
