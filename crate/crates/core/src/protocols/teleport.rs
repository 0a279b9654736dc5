//! Teleportation of an address register onto per-layer GHZ states.

use super::DrawSource;
use crate::error::{arg, Error, Result};
use crate::quantum::{ghz, Gate, MeasurementRecord, StateVector, MAX_QUBITS};

#[derive(Clone, Debug, PartialEq)]
pub struct TeleportResult {
    pub state: StateVector,
    /// Address qubits, one per layer.
    pub address: Vec<usize>,
    /// QC-side ancilla of each layer's GHZ state.
    pub ancillas: Vec<usize>,
    /// Tree nodes of each layer, left to right.
    pub layers: Vec<Vec<usize>>,
    /// `(m_x, m_z)` Bell-measurement records per layer.
    pub records: Vec<(MeasurementRecord, MeasurementRecord)>,
}

impl TeleportResult {
    pub fn tree_qubits(&self) -> Vec<usize> {
        self.layers.iter().flatten().copied().collect()
    }
}

/// Teleports bit `i` of `address` onto all `2^(i-1)` nodes of layer `i`.
///
/// Register layout: the `n` address qubits, then for each layer its ancilla
/// followed by its nodes, the two sharing a GHZ state. Each layer gets a
/// Bell measurement (CNOT address -> ancilla, H on the address, Z
/// measurements of both); X on every node of the layer fixes the ancilla
/// outcome and Z on its first node fixes the address outcome.
pub fn teleport_addresses(
    address: &StateVector,
    draws: &mut dyn DrawSource,
) -> Result<TeleportResult> {
    let n = address.num_qubits();
    let total = 2 * n + (1usize << n) - 1;
    if total > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{n}-bit address needs {total} qubits"
        )));
    }
    if !address.is_normalized(1e-9) {
        return arg("address register must be normalized");
    }
    let mut state = address.clone();
    let mut ancillas = Vec::with_capacity(n);
    let mut layers = Vec::with_capacity(n);
    let mut next = n;
    for i in 1..=n {
        let width = 1usize << (i - 1);
        state = state.tensor(&ghz(width + 1)?)?;
        ancillas.push(next);
        layers.push((next + 1..next + 1 + width).collect::<Vec<_>>());
        next += width + 1;
    }

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let (a, anc) = (i, ancillas[i]);
        state.apply(&Gate::cnot(), &[a, anc])?;
        state.apply(&Gate::h(), &[a])?;
        let mx = state.measure_with(a, draws.next_draw())?;
        let mz = state.measure_with(anc, draws.next_draw())?;
        if mz.outcome == 1 {
            state.apply_each(&Gate::x(), &layers[i])?;
        }
        if mx.outcome == 1 {
            state.apply(&Gate::z(), &[layers[i][0]])?;
        }
        records.push((mx, mz));
    }
    Ok(TeleportResult {
        state,
        address: (0..n).collect(),
        ancillas,
        layers,
        records,
    })
}

/// Direct preparation of the target tree state: every node of layer `i`
/// holds bit `i` of each address basis state.
pub fn expected_tree_state(address: &StateVector) -> Result<StateVector> {
    let n = address.num_qubits();
    let nodes = (1usize << n) - 1;
    let mut amps = vec![crate::C64::new(0.0, 0.0); 1 << nodes];
    for (j, a) in address.amplitudes().iter().enumerate() {
        let mut idx = 0usize;
        for i in 0..n {
            let bit = (j >> (n - 1 - i)) & 1;
            for _ in 0..(1usize << i) {
                idx = (idx << 1) | bit;
            }
        }
        amps[idx] = *a;
    }
    StateVector::from_amplitudes(amps)
}
