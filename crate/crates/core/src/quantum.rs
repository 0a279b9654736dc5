//! Dense state-vector engine.
//!
//! Qubit 0 is the most significant bit of a basis index: for three qubits the
//! basis index `0b100` is `|1 0 0>`. Photonic frequency qubits use the same
//! encoding with `|w0> = |0>` and `|w1> = |1>`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{arg, Error, Result};

pub const MAX_QUBITS: usize = 24;
const UNITARY_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    arity: usize,
    matrix: Vec<C64>,
    unitary: bool,
}

impl Gate {
    /// Unitary gate from a row-major `2^arity x 2^arity` matrix.
    pub fn new(arity: usize, matrix: Vec<C64>) -> Result<Self> {
        check_shape(arity, &matrix)?;
        if !is_unitary(&matrix, 1 << arity) {
            return arg("matrix is not unitary within 1e-12");
        }
        Ok(Self {
            arity,
            matrix,
            unitary: true,
        })
    }

    /// Gate that is allowed to contract the norm, e.g. a lossy reflection.
    pub fn non_unitary(arity: usize, matrix: Vec<C64>) -> Result<Self> {
        check_shape(arity, &matrix)?;
        let unitary = is_unitary(&matrix, 1 << arity);
        Ok(Self {
            arity,
            matrix,
            unitary,
        })
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let dim = entries.len();
        if !(dim == 2 || dim == 4) {
            return arg(format!("diagonal gate needs 2 or 4 entries, got {dim}"));
        }
        let mut m = vec![ZERO; dim * dim];
        for (i, &d) in entries.iter().enumerate() {
            m[i * dim + i] = d;
        }
        Self::non_unitary(dim.trailing_zeros() as usize, m)
    }

    fn fixed(arity: usize, matrix: Vec<C64>) -> Self {
        Self {
            arity,
            matrix,
            unitary: true,
        }
    }

    pub fn h() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::fixed(1, vec![h, h, h, -h])
    }

    pub fn x() -> Self {
        Self::fixed(1, vec![ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> Self {
        Self::fixed(1, vec![ZERO, -I, I, ZERO])
    }

    pub fn z() -> Self {
        Self::fixed(1, vec![ONE, ZERO, ZERO, -ONE])
    }

    pub fn phase(theta: f64) -> Self {
        Self::fixed(1, vec![ONE, ZERO, ZERO, C64::from_polar(1.0, theta)])
    }

    /// Control is the first target, the second target is flipped.
    pub fn cnot() -> Self {
        let mut m = vec![ZERO; 16];
        m[0] = ONE;
        m[5] = ONE;
        m[11] = ONE;
        m[14] = ONE;
        Self::fixed(2, m)
    }

    pub fn cz() -> Self {
        let mut m = vec![ZERO; 16];
        m[0] = ONE;
        m[5] = ONE;
        m[10] = ONE;
        m[15] = -ONE;
        Self::fixed(2, m)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[row * self.dim() + col]
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim();
        let mut m = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.matrix[r * d + c].conj();
            }
        }
        Self {
            arity: self.arity,
            matrix: m,
            unitary: self.unitary,
        }
    }
}

fn check_shape(arity: usize, matrix: &[C64]) -> Result<()> {
    if arity == 0 || arity > 2 {
        return arg(format!("gate arity must be 1 or 2, got {arity}"));
    }
    let d = 1 << arity;
    if matrix.len() != d * d {
        return arg(format!(
            "expected {} matrix entries, got {}",
            d * d,
            matrix.len()
        ));
    }
    Ok(())
}

fn is_unitary(m: &[C64], d: usize) -> bool {
    for r in 0..d {
        for c in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += m[k * d + r].conj() * m[k * d + c];
            }
            let target = if r == c { ONE } else { ZERO };
            if (acc - target).norm() > UNITARY_TOL {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn gate(self) -> Gate {
        match self {
            Pauli::X => Gate::x(),
            Pauli::Y => Gate::y(),
            Pauli::Z => Gate::z(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub outcome: u8,
    pub probability: f64,
}

/// Source of a measurement outcome: a uniform draw in `[0, 1)` or a forced
/// branch (used when enumerating every outcome).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Draw {
    Random(f64),
    Forced(u8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new_basis_state(num_qubits: usize, basis_index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{num_qubits} qubits (engine supports 1..={MAX_QUBITS})"
            )));
        }
        let len = 1usize << num_qubits;
        if basis_index >= len {
            return arg(format!(
                "basis index {basis_index} out of range for {num_qubits} qubits"
            ));
        }
        let mut amps = vec![ZERO; len];
        amps[basis_index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return arg(format!("amplitude count {len} is not a power of two >= 2"));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("{num_qubits} qubits")));
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::from_amplitudes(vec![alpha, beta])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Rescales to unit norm and returns the squared norm before rescaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 <= 0.0 || !n2.is_finite() {
            return Err(Error::Degenerate("state has zero norm".into()));
        }
        let s = 1.0 / n2.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(n2)
    }

    /// `self` occupies the leading (most significant) qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits")));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self {
            num_qubits: n,
            amps,
        })
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return arg(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            ));
        }
        Ok(())
    }

    /// Applies `gate` in place. Unitary gates leave the norm untouched; a
    /// non-unitary gate is followed by renormalization. Either way the squared
    /// norm right after the matrix action is returned, which for a contraction
    /// is the survival probability of the branch.
    pub fn apply(&mut self, gate: &Gate, targets: &[usize]) -> Result<f64> {
        self.apply_controlled(gate, &[], targets)
    }

    /// Applies `gate` on the subspace where every `(qubit, value)` control holds.
    pub fn apply_controlled(
        &mut self,
        gate: &Gate,
        controls: &[(usize, u8)],
        targets: &[usize],
    ) -> Result<f64> {
        if targets.len() != gate.arity() {
            return arg(format!(
                "gate arity {} but {} targets",
                gate.arity(),
                targets.len()
            ));
        }
        let mut used = 0usize;
        for &t in targets {
            self.check_qubit(t)?;
            if used & self.mask(t) != 0 {
                return arg("repeated target qubit");
            }
            used |= self.mask(t);
        }
        let (mut cmask, mut cval) = (0usize, 0usize);
        for &(c, v) in controls {
            self.check_qubit(c)?;
            if v > 1 {
                return arg(format!("control value {v} is not a bit"));
            }
            if (used | cmask) & self.mask(c) != 0 {
                return arg("control overlaps a target or another control");
            }
            cmask |= self.mask(c);
            if v == 1 {
                cval |= self.mask(c);
            }
        }

        let k = targets.len();
        let dim = 1usize << k;
        let offsets: Vec<usize> = (0..dim)
            .map(|j| {
                (0..k)
                    .filter(|b| (j >> (k - 1 - b)) & 1 == 1)
                    .map(|b| self.mask(targets[b]))
                    .sum()
            })
            .collect();
        let m = gate.matrix();
        let mut buf = [ZERO; 4];
        for base in 0..self.amps.len() {
            if base & used != 0 || base & cmask != cval {
                continue;
            }
            for j in 0..dim {
                buf[j] = self.amps[base + offsets[j]];
            }
            for r in 0..dim {
                let mut acc = ZERO;
                for c in 0..dim {
                    acc += m[r * dim + c] * buf[c];
                }
                self.amps[base + offsets[r]] = acc;
            }
        }

        if gate.is_unitary() {
            Ok(self.norm_sqr())
        } else {
            self.normalize()
        }
    }

    /// Applies the same single-qubit gate to each listed qubit.
    pub fn apply_each(&mut self, gate: &Gate, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            self.apply(gate, &[q])?;
        }
        Ok(())
    }

    /// `(P(0), P(1))` for one qubit, relative to the current norm.
    pub fn probabilities(&self, q: usize) -> Result<(f64, f64)> {
        self.check_qubit(q)?;
        let m = self.mask(q);
        let (mut p0, mut p1) = (0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            if i & m == 0 {
                p0 += a.norm_sqr();
            } else {
                p1 += a.norm_sqr();
            }
        }
        let total = p0 + p1;
        if total <= 0.0 {
            return Err(Error::Degenerate("state has zero norm".into()));
        }
        Ok((p0 / total, p1 / total))
    }

    /// Probability of `outcome` on qubit `q` and the renormalized projected
    /// state, or `None` when the branch is empty.
    pub fn branch(&self, q: usize, outcome: u8) -> Result<(f64, Option<StateVector>)> {
        let (p0, p1) = self.probabilities(q)?;
        let p = if outcome == 0 { p0 } else { p1 };
        if p == 0.0 {
            return Ok((0.0, None));
        }
        let mut s = self.clone();
        s.collapse(q, outcome);
        s.normalize()?;
        Ok((p, Some(s)))
    }

    fn collapse(&mut self, q: usize, outcome: u8) {
        let m = self.mask(q);
        let keep = if outcome == 0 { 0 } else { m };
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & m != keep {
                *a = ZERO;
            }
        }
    }

    /// Projects qubit `q` onto `outcome`, renormalizes, and returns the branch
    /// probability.
    pub fn project(&mut self, q: usize, outcome: u8) -> Result<f64> {
        if outcome > 1 {
            return arg(format!("outcome {outcome} is not a bit"));
        }
        let (p0, p1) = self.probabilities(q)?;
        let p = if outcome == 0 { p0 } else { p1 };
        if p == 0.0 {
            return Err(Error::Internal(format!(
                "projection of qubit {q} onto empty branch {outcome}"
            )));
        }
        self.collapse(q, outcome);
        self.normalize()?;
        Ok(p)
    }

    /// Z-basis measurement: outcome 0 when `random_draw < P(0)`.
    pub fn measure(&mut self, q: usize, random_draw: f64) -> Result<MeasurementRecord> {
        self.measure_with(q, Draw::Random(random_draw))
    }

    pub fn measure_with(&mut self, q: usize, draw: Draw) -> Result<MeasurementRecord> {
        let outcome = match draw {
            Draw::Forced(b) => b,
            Draw::Random(u) => {
                if !(0.0..1.0).contains(&u) {
                    return arg(format!("random draw {u} outside [0, 1)"));
                }
                let (p0, _) = self.probabilities(q)?;
                u8::from(u >= p0)
            }
        };
        let probability = self.project(q, outcome)?;
        Ok(MeasurementRecord {
            qubit: q,
            outcome,
            probability,
        })
    }

    /// Resets a qubit that is known to be in a computational basis state.
    pub fn reset(&mut self, q: usize) -> Result<()> {
        let (_, p1) = self.probabilities(q)?;
        if p1 > 0.5 {
            self.apply(&Gate::x(), &[q])?;
        }
        self.project(q, 0)?;
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return arg(format!(
                "dimension mismatch: {} vs {} qubits",
                self.num_qubits, other.num_qubits
            ));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<target|self>|^2`.
    pub fn overlap_fidelity(&self, target: &StateVector) -> Result<f64> {
        Ok(target.inner(self)?.norm_sqr())
    }

    /// Fidelity `<t| rho |t>` of the reduced state on `qubits` (in that
    /// order) with the pure state `target`.
    pub fn subsystem_fidelity(&self, qubits: &[usize], target: &StateVector) -> Result<f64> {
        if qubits.len() != target.num_qubits {
            return arg("target size does not match the selected qubits");
        }
        let mut seen = 0usize;
        for &q in qubits {
            self.check_qubit(q)?;
            if seen & self.mask(q) != 0 {
                return arg("repeated qubit");
            }
            seen |= self.mask(q);
        }
        let k = qubits.len();
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|j| {
                (0..k)
                    .filter(|b| (j >> (k - 1 - b)) & 1 == 1)
                    .map(|b| self.mask(qubits[b]))
                    .sum()
            })
            .collect();
        let mut f = 0.0;
        for env in 0..self.amps.len() {
            if env & seen != 0 {
                continue;
            }
            let ov: C64 = offsets
                .iter()
                .zip(&target.amps)
                .map(|(&o, t)| t.conj() * self.amps[env + o])
                .sum();
            f += ov.norm_sqr();
        }
        Ok(f / (self.norm_sqr() * target.norm_sqr()))
    }

    /// Reduced pure state on `keep` when every other qubit sits in a definite
    /// computational basis state (probability above `1 - 1e-9`).
    pub fn extract(&self, keep: &[usize]) -> Result<StateVector> {
        let n = self.num_qubits;
        let mut kmask = 0usize;
        for &q in keep {
            self.check_qubit(q)?;
            if kmask & self.mask(q) != 0 {
                return arg("repeated qubit");
            }
            kmask |= self.mask(q);
        }
        // dominant environment configuration
        let mut weights = std::collections::BTreeMap::<usize, f64>::new();
        for (i, a) in self.amps.iter().enumerate() {
            *weights.entry(i & !kmask).or_default() += a.norm_sqr();
        }
        let total: f64 = weights.values().sum();
        let (&env, &w) = weights
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Internal("empty state".into()))?;
        if w < total * (1.0 - 1e-9) {
            return Err(Error::Argument(format!(
                "qubits outside {keep:?} are entangled or in superposition (weight {:.3e})",
                w / total
            )));
        }
        let k = keep.len();
        let amps = (0..1usize << k)
            .map(|j| {
                let off: usize = (0..k)
                    .filter(|b| (j >> (k - 1 - b)) & 1 == 1)
                    .map(|b| 1usize << (n - 1 - keep[b]))
                    .sum();
                self.amps[env + off]
            })
            .collect();
        let mut out = StateVector::from_amplitudes(amps)?;
        out.normalize()?;
        Ok(out)
    }

    /// Value of a qubit known to be in a basis state.
    pub fn basis_value(&self, q: usize) -> Result<u8> {
        let (p0, p1) = self.probabilities(q)?;
        if p0 > 1.0 - 1e-9 {
            Ok(0)
        } else if p1 > 1.0 - 1e-9 {
            Ok(1)
        } else {
            arg(format!("qubit {q} is not in a basis state (P1 = {p1})"))
        }
    }
}

/// `(|0...0> + |1...1>)/sqrt(2)` on `n` qubits.
pub fn ghz(n: usize) -> Result<StateVector> {
    let mut s = StateVector::new_basis_state(n, 0)?;
    let last = s.amps.len() - 1;
    s.amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    s.amps[last] = C64::new(FRAC_1_SQRT_2, 0.0);
    Ok(s)
}
