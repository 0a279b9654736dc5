//! Heralded photon-spin protocols executed exactly on [`StateVector`].
//!
//! Photonic qubits are frequency encoded (`|w0> = |0>`, `|w1> = |1>`), spins
//! use `|down> = |0>`, `|up> = |1>`. A reflection acts on a (photon, spin)
//! pair as the diagonal map
//!
//! ```text
//! |w0,s> -> r_m |w0,s>    |w1,down> -> r_off |w1,down>    |w1,up> -> r_on |w1,up>
//! ```
//!
//! which for the ideal triple `(+1, -1, -1)` is `-CZ`. Photon loss never
//! enters the state vector; it is reported as the missing branch probability.

use serde::Serialize;

use crate::cavity::ReflectionTriple;
use crate::error::{arg, Result};
use crate::quantum::{Draw, Gate, Pauli, StateVector};
use crate::C64;

pub mod entangle;
pub mod query;
pub mod setting;
pub mod teleport;

pub use entangle::{bell_create, broker_memory_swap, ghz_link, BellOutcome, SwapDirection};
pub use query::{expected_query_state, full_query_sim, QueryLayout, QueryResult};
pub use setting::{
    fidelity_contour, optimize_mirror, optimized_triple, route_through_interferometer,
    routing_step, setting_step, setting_step_with, six_state_inputs, spin_to_photon,
    spin_to_photon_with, transfer_fidelity, transfer_fidelity_with, SettingOutcome,
};
pub use teleport::{expected_tree_state, teleport_addresses, TeleportResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Port {
    Omega0,
    Omega1,
    Lost,
}

impl Port {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Port::Omega0
        } else {
            Port::Omega1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeraldOutcome {
    pub port: Port,
    /// Absolute probability of this click, loss included.
    pub probability: f64,
    /// Corrected post-herald state, `None` when the port never clicks.
    pub post_state: Option<StateVector>,
    pub corrections: Vec<Pauli>,
}

impl HeraldOutcome {
    /// A port that never clicks.
    pub fn none(port: Port) -> Self {
        Self {
            port,
            probability: 0.0,
            post_state: None,
            corrections: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SixStateFidelity {
    pub per_state: [f64; 6],
    pub mean: f64,
}

impl SixStateFidelity {
    pub fn from_states(per_state: [f64; 6]) -> Self {
        Self {
            per_state,
            mean: per_state.iter().sum::<f64>() / 6.0,
        }
    }
}

/// Which mirror phase is treated as ideal. `PiMirror` (`r_m = -1`) applies
/// the Pauli-Z fix-up on an `w1` click; `InPhaseMirror` (`r_m = +1`) applies
/// it on an `w0` click instead.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    #[default]
    PiMirror,
    InPhaseMirror,
}

impl SignConvention {
    pub fn mirror_sign(self) -> f64 {
        match self {
            SignConvention::PiMirror => -1.0,
            SignConvention::InPhaseMirror => 1.0,
        }
    }

    /// Herald bit that calls for a Z correction on the spin.
    pub fn z_port(self) -> u8 {
        match self {
            SignConvention::PiMirror => 1,
            SignConvention::InPhaseMirror => 0,
        }
    }

    pub fn ideal_triple(self) -> ReflectionTriple {
        ReflectionTriple {
            r_m: C64::new(self.mirror_sign(), 0.0),
            ..ReflectionTriple::ideal()
        }
    }
}

/// Electron (broker) and nuclear (memory) spin of one tree node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NodeState {
    pub broker: usize,
    pub memory: usize,
    pub layer: usize,
    pub position: usize,
}

impl NodeState {
    pub fn new(broker: usize, memory: usize, layer: usize, position: usize) -> Result<Self> {
        if broker == memory {
            return arg("broker and memory must be distinct qubits");
        }
        Ok(Self {
            broker,
            memory,
            layer,
            position,
        })
    }
}

/// Reflection map on (photon, spin).
pub fn reflection_gate(t: &ReflectionTriple) -> Result<Gate> {
    Gate::diagonal(&[t.r_m, t.r_m, t.r_off, t.r_on])
}

/// Supplies one outcome per measurement. Any `FnMut() -> Draw` closure is a
/// source.
pub trait DrawSource {
    fn next_draw(&mut self) -> Draw;
}

impl<F: FnMut() -> Draw> DrawSource for F {
    fn next_draw(&mut self) -> Draw {
        self()
    }
}

/// Forces the listed outcomes in order, then outcome 0.
pub struct ForcedOutcomes {
    bits: Vec<u8>,
    pos: usize,
}

impl ForcedOutcomes {
    pub fn new(bits: impl Into<Vec<u8>>) -> Self {
        Self {
            bits: bits.into(),
            pos: 0,
        }
    }

    /// Bits of `index`, most significant first, padded to `width`.
    pub fn from_index(index: usize, width: usize) -> Self {
        Self::new(
            (0..width)
                .map(|b| ((index >> (width - 1 - b)) & 1) as u8)
                .collect::<Vec<_>>(),
        )
    }
}

impl DrawSource for ForcedOutcomes {
    fn next_draw(&mut self) -> Draw {
        let b = self.bits.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        Draw::Forced(b)
    }
}

/// Uniform draws from a random generator.
pub struct SampledOutcomes<R>(pub R);

impl<R: rand::Rng> DrawSource for SampledOutcomes<R> {
    fn next_draw(&mut self) -> Draw {
        Draw::Random(self.0.random::<f64>())
    }
}

pub(crate) fn check_normalized(alpha: C64, beta: C64) -> Result<()> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return arg(format!("input qubit is not normalized (|a|^2+|b|^2 = {n})"));
    }
    Ok(())
}
