//! Heralded Bell pairs between two cavities, broker/memory swaps inside a
//! node, and fusion of neighbouring GHZ groups through an electron bridge.

use serde::Serialize;

use super::setting::SettingOutcome;
use super::{reflection_gate, DrawSource, HeraldOutcome, NodeState, Port};
use crate::cavity::ReflectionTriple;
use crate::error::{arg, Error, Result};
use crate::quantum::{Gate, MeasurementRecord, Pauli, StateVector};

pub type BellOutcome = SettingOutcome;

/// One photon in `|+>` reflects off both cavities (spins in `|+>`), then is
/// measured in the frequency-Hadamard basis. An `w0` click leaves
/// `(|dd> + |uu>)/sqrt2`; an `w1` click leaves `(|du> + |ud>)/sqrt2`, which an
/// X on the second spin maps back to the same state.
pub fn bell_create(
    triple_a: &ReflectionTriple,
    triple_b: &ReflectionTriple,
) -> Result<BellOutcome> {
    // qubit 0 photon, 1 spin A, 2 spin B
    let mut state = StateVector::new_basis_state(3, 0)?;
    state.apply_each(&Gate::h(), &[0, 1, 2])?;
    let mut survival = 1.0;
    for (t, spin) in [(triple_a, 1), (triple_b, 2)] {
        survival *= match state.apply(&reflection_gate(t)?, &[0, spin]) {
            Err(Error::Degenerate(_)) => 0.0,
            other => other?,
        };
        if survival == 0.0 {
            break;
        }
    }
    let mut out = [
        HeraldOutcome::none(Port::Omega0),
        HeraldOutcome::none(Port::Omega1),
    ];
    if survival > 0.0 {
        state.apply(&Gate::h(), &[0])?;
        for bit in 0..2u8 {
            if let (p, Some(mut s)) = state.branch(0, bit)? {
                let mut corrections = Vec::new();
                if bit == 1 {
                    s.apply(&Gate::x(), &[2])?;
                    corrections.push(Pauli::X);
                }
                out[bit as usize] = HeraldOutcome {
                    port: Port::from_bit(bit),
                    probability: survival * p,
                    post_state: Some(s.extract(&[1, 2])?),
                    corrections,
                };
            }
        }
    }
    let [omega0, omega1] = out;
    let loss_probability = 1.0 - omega0.probability - omega1.probability;
    Ok(SettingOutcome {
        omega0,
        omega1,
        loss_probability,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SwapDirection {
    ToMemory,
    ToBroker,
}

/// Moves the state of one spin of `node` onto the other, in place.
///
/// CNOT source -> target, X-basis measurement of the source, Z on the target
/// for outcome 1, then the source is reset to `|0>`. The target must start in
/// `|0>`.
pub fn broker_memory_swap(
    state: &mut StateVector,
    node: NodeState,
    direction: SwapDirection,
    draws: &mut dyn DrawSource,
) -> Result<MeasurementRecord> {
    let (src, dst) = match direction {
        SwapDirection::ToMemory => (node.broker, node.memory),
        SwapDirection::ToBroker => (node.memory, node.broker),
    };
    if src == dst {
        return arg("broker and memory must differ");
    }
    if state.basis_value(dst).ok() != Some(0) {
        return arg(format!("swap target qubit {dst} is not initialized to |0>"));
    }
    state.apply(&Gate::cnot(), &[src, dst])?;
    state.apply(&Gate::h(), &[src])?;
    let rec = state.measure_with(src, draws.next_draw())?;
    if rec.outcome == 1 {
        state.apply(&Gate::z(), &[dst])?;
        state.apply(&Gate::x(), &[src])?;
    }
    Ok(rec)
}

/// Fuses two GHZ groups of memory spins through an electron Bell pair
/// `bridge = (eL, eR)`, in place.
///
/// `left` ends with the memory next to `eL`, `right` starts with the memory
/// next to `eR`. CNOT(left.last -> eL) and a Z measurement of eL heralds X on
/// eR; CNOT(right.first -> eR) and a Z measurement of eR heralds X on the
/// whole right group. Both electrons end in `|0>`.
pub fn ghz_link(
    state: &mut StateVector,
    left: &[usize],
    right: &[usize],
    bridge: (usize, usize),
    draws: &mut dyn DrawSource,
) -> Result<[MeasurementRecord; 2]> {
    let (el, er) = bridge;
    let (Some(&n2), Some(&n3)) = (left.last(), right.first()) else {
        return arg("ghz_link needs non-empty left and right groups");
    };
    let mut all: Vec<usize> = left.iter().chain(right).copied().chain([el, er]).collect();
    let n = all.len();
    all.sort_unstable();
    all.dedup();
    if all.len() != n {
        return arg("ghz_link wiring reuses a qubit");
    }
    if all.iter().any(|&q| q >= state.num_qubits()) {
        return arg("ghz_link wiring refers to a qubit outside the register");
    }

    state.apply(&Gate::cnot(), &[n2, el])?;
    let m1 = state.measure_with(el, draws.next_draw())?;
    if m1.outcome == 1 {
        state.apply(&Gate::x(), &[er])?;
        state.apply(&Gate::x(), &[el])?;
    }
    state.apply(&Gate::cnot(), &[n3, er])?;
    let m2 = state.measure_with(er, draws.next_draw())?;
    if m2.outcome == 1 {
        state.apply_each(&Gate::x(), right)?;
        state.apply(&Gate::x(), &[er])?;
    }
    Ok([m1, m2])
}
