//! Simulation toolkit for a cavity-assisted quantum random access memory.
//!
//! * [`quantum`]: dense state-vector engine used as the exact reference.
//! * [`cavity`]: atom-cavity reflectivity and the reflection triple.
//! * [`filter`]: ring-resonator add-drop filter transfer matrices.
//! * [`protocols`]: heralded setting, routing, Bell, GHZ and teleportation steps.
//! * [`glm`]: closed-form query rates of the sequential scheme.
//! * [`teleport`]: event-based simulation of the teleportation scheme.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod error;
pub mod filter;
pub mod glm;
pub mod protocols;
pub mod quantum;
pub mod sweep;
pub mod teleport;

pub use cavity::{CavityParams, FieldDeviation, ReflectionTriple, Spin};
pub use error::{Error, Result};
pub use filter::{CouplerSetting, FilterResponse, RingGeometry};
pub use num_complex::Complex64 as C64;
pub use quantum::{Draw, Gate, MeasurementRecord, Pauli, StateVector};
pub use sweep::SweepResult;
