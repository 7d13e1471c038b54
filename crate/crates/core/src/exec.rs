//! Serial and layer-parallel execution of fused gate lists.
//!
//! The parallel executor runs one layer at a time. Inside a layer every
//! worker repeatedly claims the next gate index from a shared atomic counter
//! and applies that gate; since the gates of a layer act on pairwise disjoint
//! sites, they can run concurrently on the shared site tensors. A barrier
//! closes each layer, after which one worker reconciles bond bookkeeping and
//! records the layer's timing before everyone moves on.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Barrier, Mutex, MutexGuard, TryLockError};
use std::thread;
use std::time::Instant;

use thiserror::Error;

use crate::apply::{apply_1q_site, apply_2q_sites, NonlocalMethod, TruncationPolicy};
use crate::circuit::{FusedGate, GateQubits, LayerPlan};
use crate::mps::{MpsError, MpsState};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("invalid layer plan: {0}")]
    InvalidPlan(String),
    #[error("gate {gate} of layer {layer} overlaps a gate already running")]
    SpanOverlap { layer: usize, gate: usize },
    #[error("worker panicked on gate {gate} of layer {layer}: {message}")]
    WorkerPanic {
        layer: usize,
        gate: usize,
        message: String,
    },
    #[error("gate {gate} of layer {layer} failed: {source}")]
    Gate {
        layer: usize,
        gate: usize,
        source: MpsError,
    },
    #[error(transparent)]
    Mps(#[from] MpsError),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerStats {
    pub layer_index: usize,
    pub gates: usize,
    /// Gate time summed over workers.
    pub compute_ns: u64,
    /// Largest per-worker gate time in this layer.
    pub max_worker_compute_ns: u64,
    /// Barrier wait (first arrival to release) plus bookkeeping merge.
    pub sync_ns: u64,
    /// Gate indices in claim order, across all workers.
    pub claimed: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecStats {
    pub per_layer: Vec<LayerStats>,
    pub total_wall_ns: u64,
    pub peak_bond: usize,
    pub workers: usize,
    pub total_discarded_weight: f64,
}

impl ExecStats {
    pub fn gate_count(&self) -> usize {
        self.per_layer.iter().map(|l| l.gates).sum()
    }
}

/// Monotone gate-index dispenser for one layer.
#[derive(Debug, Default)]
pub struct TaskCounter(AtomicUsize);

impl TaskCounter {
    pub fn new() -> Self {
        Self(AtomicUsize::new(0))
    }

    /// Returns the next unclaimed index.
    pub fn claim(&self) -> usize {
        self.0.fetch_add(1, Ordering::AcqRel)
    }
}

fn nanos(d: std::time::Duration) -> u64 {
    d.as_nanos().min(u64::MAX as u128) as u64
}

/// Applies `gates` in order on the calling thread. Non-adjacent pairs are
/// routed through `method`. Recorded as a single layer.
pub fn execute_serial(
    state: &mut MpsState,
    gates: &[FusedGate],
    policy: &TruncationPolicy,
    method: NonlocalMethod,
) -> Result<ExecStats, ExecError> {
    let start = Instant::now();
    let mut peak = state.max_bond();
    let mut discarded = 0.0;
    for (i, g) in gates.iter().enumerate() {
        let rep = state
            .apply_gate(g, policy, method)
            .map_err(|source| ExecError::Gate { layer: 0, gate: i, source })?;
        discarded += rep.discarded_weight;
        peak = peak.max(rep.new_bond);
    }
    let elapsed = nanos(start.elapsed());
    Ok(ExecStats {
        per_layer: vec![LayerStats {
            layer_index: 0,
            gates: gates.len(),
            compute_ns: elapsed,
            max_worker_compute_ns: elapsed,
            sync_ns: 0,
            claimed: (0..gates.len()).collect(),
        }],
        total_wall_ns: elapsed,
        peak_bond: peak.max(state.max_bond()),
        workers: 1,
        total_discarded_weight: discarded,
    })
}

fn validate_plan(plan: &LayerPlan, n: usize) -> Result<(), ExecError> {
    for (li, layer) in plan.layers().iter().enumerate() {
        let mut used = vec![false; n];
        for (gi, g) in layer.iter().enumerate() {
            let (lo, hi) = g.span();
            if hi >= n {
                return Err(ExecError::InvalidPlan(format!(
                    "gate {gi} of layer {li} touches qubit {hi} of {n}"
                )));
            }
            if !g.is_local() {
                return Err(ExecError::InvalidPlan(format!(
                    "gate {gi} of layer {li} on ({lo}, {hi}) is not local"
                )));
            }
            for (q, slot) in used.iter_mut().enumerate().take(hi + 1).skip(lo) {
                if std::mem::replace(slot, true) {
                    return Err(ExecError::InvalidPlan(format!(
                        "qubit {q} used twice in layer {li}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn lock_site(site: &Mutex<DenseTensor>) -> Option<MutexGuard<'_, DenseTensor>> {
    match site.try_lock() {
        Ok(g) => Some(g),
        Err(TryLockError::Poisoned(p)) => Some(p.into_inner()),
        Err(TryLockError::WouldBlock) => None,
    }
}

fn run_gate(
    sites: &[Mutex<DenseTensor>],
    gate: &FusedGate,
    policy: &TruncationPolicy,
    layer: usize,
    index: usize,
) -> Result<f64, ExecError> {
    let overlap = || ExecError::SpanOverlap { layer, gate: index };
    match gate.qubits() {
        GateQubits::One(q) => {
            let mut site = lock_site(&sites[q]).ok_or_else(overlap)?;
            apply_1q_site(&mut site, gate.matrix());
            Ok(0.0)
        }
        GateQubits::Two { low, high, .. } => {
            debug_assert_eq!(high, low + 1);
            let mut left = lock_site(&sites[low]).ok_or_else(overlap)?;
            let mut right = lock_site(&sites[high]).ok_or_else(overlap)?;
            apply_2q_sites(&mut left, &mut right, gate.matrix(), policy)
                .map_err(|source| ExecError::Gate { layer, gate: index, source })
        }
    }
}

#[derive(Default)]
struct LayerAccum {
    compute_ns: u64,
    max_worker_ns: u64,
    claimed: Vec<usize>,
    discarded: f64,
    first_arrival: Option<Instant>,
}

/// Runs a layer plan with `workers` threads sharing the state.
///
/// The plan must contain only 1-qubit and nearest-neighbour 2-qubit gates
/// with disjoint qubits inside each layer. On failure the partially updated
/// state is dropped and the first error is returned.
pub fn execute_parallel(
    state: MpsState,
    plan: &LayerPlan,
    policy: &TruncationPolicy,
    workers: usize,
) -> Result<(MpsState, ExecStats), ExecError> {
    if workers == 0 {
        return Err(ExecError::NoWorkers);
    }
    let n = state.n_qubits();
    validate_plan(plan, n)?;

    let start = Instant::now();
    let initial_peak = state.max_bond();
    let sites: Vec<Mutex<DenseTensor>> = state.sites.into_iter().map(Mutex::new).collect();
    let layers = plan.layers();
    let counters: Vec<TaskCounter> = layers.iter().map(|_| TaskCounter::new()).collect();
    let accum: Vec<Mutex<LayerAccum>> = layers.iter().map(|_| Mutex::default()).collect();
    let stats_out: Mutex<Vec<LayerStats>> = Mutex::new(Vec::with_capacity(layers.len()));
    let peak = AtomicUsize::new(initial_peak);
    let barrier = Barrier::new(workers);
    let abort = AtomicBool::new(false);
    let failure: Mutex<Option<ExecError>> = Mutex::new(None);

    let fail = |e: ExecError| {
        abort.store(true, Ordering::SeqCst);
        let mut slot = failure.lock().unwrap_or_else(|p| p.into_inner());
        slot.get_or_insert(e);
    };

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                for (li, layer) in layers.iter().enumerate() {
                    let mut mine = 0u64;
                    let mut claimed = Vec::new();
                    let mut discarded = 0.0;
                    while !abort.load(Ordering::SeqCst) {
                        let k = counters[li].claim();
                        if k >= layer.len() {
                            break;
                        }
                        claimed.push(k);
                        let t = Instant::now();
                        let res = catch_unwind(AssertUnwindSafe(|| run_gate(&sites, &layer[k], policy, li, k)));
                        mine += nanos(t.elapsed());
                        match res {
                            Ok(Ok(dw)) => discarded += dw,
                            Ok(Err(e)) => fail(e),
                            Err(payload) => {
                                let message = payload
                                    .downcast_ref::<&str>()
                                    .map(|s| s.to_string())
                                    .or_else(|| payload.downcast_ref::<String>().cloned())
                                    .unwrap_or_else(|| "unknown panic".into());
                                fail(ExecError::WorkerPanic { layer: li, gate: k, message });
                            }
                        }
                    }
                    let arrival = Instant::now();
                    {
                        let mut acc = accum[li].lock().unwrap_or_else(|p| p.into_inner());
                        acc.compute_ns += mine;
                        acc.max_worker_ns = acc.max_worker_ns.max(mine);
                        acc.claimed.extend(claimed);
                        acc.discarded += discarded;
                        acc.first_arrival = Some(acc.first_arrival.map_or(arrival, |a| a.min(arrival)));
                    }
                    if barrier.wait().is_leader() {
                        let released = Instant::now();
                        let mut layer_peak = 0;
                        for site in sites.iter() {
                            let s = site.lock().unwrap_or_else(|p| p.into_inner());
                            layer_peak = layer_peak.max(s.shape()[0]).max(s.shape()[2]);
                        }
                        peak.fetch_max(layer_peak, Ordering::SeqCst);
                        let mut acc = accum[li].lock().unwrap_or_else(|p| p.into_inner());
                        let waited = acc.first_arrival.map_or(0, |a| nanos(released.duration_since(a)));
                        let sync_ns = waited + nanos(released.elapsed());
                        stats_out.lock().unwrap_or_else(|p| p.into_inner()).push(LayerStats {
                            layer_index: li,
                            gates: layer.len(),
                            compute_ns: acc.compute_ns,
                            max_worker_compute_ns: acc.max_worker_ns,
                            sync_ns,
                            claimed: std::mem::take(&mut acc.claimed),
                        });
                    }
                    barrier.wait();
                    if abort.load(Ordering::SeqCst) {
                        return;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e);
    }
    let total_discarded_weight = accum
        .into_iter()
        .map(|a| a.into_inner().unwrap_or_else(|p| p.into_inner()).discarded)
        .sum();
    let sites: Vec<DenseTensor> = sites
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|p| p.into_inner()))
        .collect();
    let state = MpsState::from_sites(sites)?;
    let stats = ExecStats {
        per_layer: stats_out.into_inner().unwrap_or_else(|p| p.into_inner()),
        total_wall_ns: nanos(start.elapsed()),
        peak_bond: peak.into_inner().max(state.max_bond()),
        workers,
        total_discarded_weight,
    };
    Ok((state, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gates, layerize};

    #[test]
    fn counter_hands_out_each_index_once() {
        let c = TaskCounter::new();
        let got: Vec<usize> = (0..5).map(|_| c.claim()).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_serial_run() {
        let mut s = MpsState::init_zero(3).unwrap();
        let before = s.clone();
        let stats = execute_serial(&mut s, &[], &TruncationPolicy::UNBOUNDED, NonlocalMethod::Swap).unwrap();
        assert_eq!(s, before);
        assert_eq!(stats.gate_count(), 0);
        assert_eq!(stats.per_layer[0].sync_ns, 0);
    }

    #[test]
    fn rejects_bad_plans() {
        let s = MpsState::init_zero(3).unwrap();
        let p = TruncationPolicy::UNBOUNDED;
        assert_eq!(
            execute_parallel(s.clone(), &LayerPlan::default(), &p, 0).unwrap_err(),
            ExecError::NoWorkers
        );
        let plan = layerize(&[FusedGate::two(1, 2, gates::cx()), FusedGate::one(4, gates::x())]).unwrap();
        assert!(matches!(
            execute_parallel(s, &plan, &p, 2),
            Err(ExecError::InvalidPlan(_))
        ));
    }

    #[test]
    fn claims_cover_each_layer() {
        let mut gs = Vec::new();
        for q in 0..6 {
            gs.push(FusedGate::one(q, if q % 2 == 0 { gates::h() } else { gates::t() }));
        }
        for q in (0..6).step_by(2) {
            gs.push(FusedGate::two(q, q + 1, gates::cx()));
        }
        let plan = layerize(&gs).unwrap();
        let (_, stats) = execute_parallel(MpsState::init_zero(6).unwrap(), &plan, &TruncationPolicy::UNBOUNDED, 3).unwrap();
        assert_eq!(stats.per_layer.len(), plan.len());
        for (ls, layer) in stats.per_layer.iter().zip(plan.layers()) {
            let mut c = ls.claimed.clone();
            c.sort_unstable();
            assert_eq!(c, (0..layer.len()).collect::<Vec<_>>());
        }
        assert_eq!(stats.gate_count(), gs.len());
        assert_eq!(stats.peak_bond, 2);
    }
}
