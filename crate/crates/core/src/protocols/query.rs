//! End-to-end query of a small tree memory.
//!
//! Register layout for depth `n`: address photons `0..n`, tree node spins in
//! heap order (root first, then each layer left to right), and one bus qubit.
//! Node `(layer i, position p)` sits on the path of address `j` when `p` equals
//! the first `i - 1` bits of `j`; the photon's route to a node is therefore
//! modelled as a reflection controlled on the spins along that path.

use super::{reflection_gate, DrawSource, Port};
use crate::cavity::ReflectionTriple;
use crate::error::{arg, Error, Result};
use crate::quantum::{Gate, MeasurementRecord, StateVector};

pub const MAX_QUERY_DEPTH: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryLayout {
    pub depth: usize,
    pub address: Vec<usize>,
    pub tree: Vec<usize>,
    pub bus: usize,
}

impl QueryLayout {
    pub fn new(depth: usize) -> Self {
        let nodes = (1usize << depth) - 1;
        Self {
            depth,
            address: (0..depth).collect(),
            tree: (depth..depth + nodes).collect(),
            bus: depth + nodes,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.bus + 1
    }

    /// Qubit of node `position` in `layer` (both 1-based layer, 0-based position).
    pub fn node(&self, layer: usize, position: usize) -> usize {
        self.depth + (1usize << (layer - 1)) - 1 + position
    }

    /// `(qubit, value)` controls selecting the route to `(layer, position)`.
    pub fn path(&self, layer: usize, position: usize) -> Vec<(usize, u8)> {
        (1..layer)
            .map(|l| {
                let shift = layer - 1 - l;
                let value = ((position >> shift) & 1) as u8;
                (self.node(l, position >> (shift + 1)), value)
            })
            .collect()
    }

    pub fn layer_nodes(&self, layer: usize) -> Vec<usize> {
        (0..1usize << (layer - 1))
            .map(|p| self.node(layer, p))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub state: StateVector,
    pub layout: QueryLayout,
    /// Setting-step photon detections, one per layer.
    pub heralds: Vec<(usize, Port, MeasurementRecord)>,
    /// Probability that no photon was lost along the way.
    pub survival: f64,
}

/// Runs setting, retrieval and uncompute on a depth-`n` tree, `n <= 3`.
///
/// Setting, layer by layer: the layer's spins are rotated to `|+>`, the
/// address photon reflects off the node on its route, is Hadamard-measured,
/// and the layer is rotated back with a Z fix-up on an `w1` click; the photon
/// slot is then cleared. Retrieval flips the bus for every cell holding a 1,
/// conditioned on the route to that cell. Uncompute runs deepest layer first
/// with a fresh photon per layer: a reflection sandwiched by photon
/// Hadamards copies the node onto the photon, and a second one sandwiched by
/// layer Hadamards clears the node. The triple is read with the `r_m = -1`
/// convention.
pub fn full_query_sim(
    address: &StateVector,
    data: &[u8],
    triple: &ReflectionTriple,
    draws: &mut dyn DrawSource,
) -> Result<QueryResult> {
    let n = address.num_qubits();
    if n > MAX_QUERY_DEPTH {
        return Err(Error::Capacity(format!(
            "query depth {n} exceeds {MAX_QUERY_DEPTH}"
        )));
    }
    if data.len() != 1 << n || data.iter().any(|&d| d > 1) {
        return arg(format!("need {} data bits for depth {n}", 1 << n));
    }
    if !address.is_normalized(1e-9) {
        return arg("address register must be normalized");
    }
    let layout = QueryLayout::new(n);
    let mut state = address.tensor(&StateVector::new_basis_state(layout.num_qubits() - n, 0)?)?;
    let refl = reflection_gate(triple)?;
    let h = Gate::h();
    let mut survival = 1.0;
    let mut reflect_layer = |state: &mut StateVector, photon: usize, layer: usize| -> Result<()> {
        for p in 0..1usize << (layer - 1) {
            let node = layout.node(layer, p);
            survival *= state.apply_controlled(&refl, &layout.path(layer, p), &[photon, node])?;
        }
        Ok(())
    };

    let mut heralds = Vec::with_capacity(n);
    for layer in 1..=n {
        let photon = layout.address[layer - 1];
        let nodes = layout.layer_nodes(layer);
        state.apply_each(&h, &nodes)?;
        reflect_layer(&mut state, photon, layer)?;
        state.apply(&h, &[photon])?;
        let rec = state.measure_with(photon, draws.next_draw())?;
        state.apply_each(&h, &nodes)?;
        if rec.outcome == 1 {
            state.apply_each(&Gate::z(), &nodes)?;
            state.apply(&Gate::x(), &[photon])?;
        }
        heralds.push((layer, Port::from_bit(rec.outcome), rec));
    }

    for (cell, &bit) in data.iter().enumerate() {
        if bit == 1 {
            let controls: Vec<(usize, u8)> = (1..=n)
                .map(|l| {
                    let pos = cell >> (n - l + 1);
                    (layout.node(l, pos), ((cell >> (n - l)) & 1) as u8)
                })
                .collect();
            state.apply_controlled(&Gate::x(), &controls, &[layout.bus])?;
        }
    }

    for layer in (1..=n).rev() {
        let photon = layout.address[layer - 1];
        let nodes = layout.layer_nodes(layer);
        state.apply(&h, &[photon])?;
        reflect_layer(&mut state, photon, layer)?;
        state.apply(&h, &[photon])?;
        state.apply_each(&h, &nodes)?;
        reflect_layer(&mut state, photon, layer)?;
        state.apply_each(&h, &nodes)?;
    }

    Ok(QueryResult {
        state,
        layout,
        heralds,
        survival,
    })
}

/// `sum_j a_j |j>|D_j>` over (address, bus).
pub fn expected_query_state(address: &StateVector, data: &[u8]) -> Result<StateVector> {
    if data.len() != address.amplitudes().len() {
        return arg("data length must match the address dimension");
    }
    let mut amps = vec![crate::C64::new(0.0, 0.0); 2 * data.len()];
    for (j, a) in address.amplitudes().iter().enumerate() {
        amps[2 * j + data[j] as usize] = *a;
    }
    StateVector::from_amplitudes(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::ForcedOutcomes;

    #[test]
    fn layout_paths() {
        let l = QueryLayout::new(3);
        assert_eq!(l.num_qubits(), 11);
        assert_eq!(l.node(1, 0), 3);
        assert_eq!(l.node(2, 1), 5);
        assert_eq!(l.node(3, 2), 8);
        assert_eq!(l.path(3, 2), vec![(3, 1), (5, 0)]);
        assert!(l.path(1, 0).is_empty());
    }

    #[test]
    fn classical_address_returns_cell() {
        let addr = StateVector::new_basis_state(2, 2).unwrap();
        let data = [0, 1, 1, 0];
        let out = full_query_sim(
            &addr,
            &data,
            &ReflectionTriple::ideal(),
            &mut ForcedOutcomes::new([0, 1]),
        )
        .unwrap();
        assert_eq!(out.state.basis_value(out.layout.bus).unwrap(), 1);
        for &q in &out.layout.tree {
            assert_eq!(out.state.basis_value(q).unwrap(), 0);
        }
        assert!((out.survival - 1.0).abs() < 1e-12);
    }

    #[test]
    fn superposed_address_all_heralds() {
        for n in 1..=3usize {
            let dim = 1 << n;
            let amps: Vec<_> = (0..dim)
                .map(|j| crate::C64::new(1.0 + j as f64, 0.5 * j as f64))
                .collect();
            let mut addr = StateVector::from_amplitudes(amps).unwrap();
            addr.normalize().unwrap();
            let data: Vec<u8> = (0..dim).map(|j| ((j * 5 + 1) % 3 == 0) as u8).collect();
            let want = expected_query_state(&addr, &data).unwrap();
            for idx in 0..dim {
                let mut draws = ForcedOutcomes::from_index(idx, n);
                let out =
                    full_query_sim(&addr, &data, &ReflectionTriple::ideal(), &mut draws).unwrap();
                let mut keep = out.layout.address.clone();
                keep.push(out.layout.bus);
                let got = out.state.extract(&keep).unwrap();
                assert!(
                    (got.overlap_fidelity(&want).unwrap() - 1.0).abs() < 1e-10,
                    "n={n} idx={idx}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let addr = StateVector::new_basis_state(2, 0).unwrap();
        let t = ReflectionTriple::ideal();
        assert!(full_query_sim(&addr, &[0, 1], &t, &mut ForcedOutcomes::new([])).is_err());
        let deep = StateVector::new_basis_state(4, 0).unwrap();
        assert!(matches!(
            full_query_sim(&deep, &[0; 16], &t, &mut ForcedOutcomes::new([])),
            Err(Error::Capacity(_))
        ));
    }
}
