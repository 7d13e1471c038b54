//! Partition of a local gate list into layers of qubit-disjoint gates.

use super::{CircuitError, FusedGate};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerPlan {
    layers: Vec<Vec<FusedGate>>,
}

impl LayerPlan {
    pub fn layers(&self) -> &[Vec<FusedGate>] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Gates in execution order: by layer, then in-layer order.
    pub fn flatten(&self) -> Vec<FusedGate> {
        self.layers.iter().flatten().cloned().collect()
    }
}

/// As-soon-as-possible layering: each gate goes into the first layer after
/// the latest layer holding an earlier gate on any of its qubits.
pub fn layerize(gates: &[FusedGate]) -> Result<LayerPlan, CircuitError> {
    let mut layers: Vec<Vec<FusedGate>> = Vec::new();
    // number of layers already occupied on each qubit
    let mut depth: Vec<usize> = Vec::new();
    for g in gates {
        let (lo, hi) = g.span();
        if hi - lo > 1 {
            return Err(CircuitError::NonLocal(lo, hi));
        }
        if depth.len() <= hi {
            depth.resize(hi + 1, 0);
        }
        let qubits = g.qubit_list();
        let layer = qubits.iter().map(|&q| depth[q]).max().unwrap_or(0);
        if layer == layers.len() {
            layers.push(Vec::new());
        }
        layers[layer].push(g.clone());
        for q in qubits {
            depth[q] = layer + 1;
        }
    }
    Ok(LayerPlan { layers })
}
