//! Single-sided atom-cavity reflectivity and the reflection amplitudes seen by
//! the two frequency components of a photonic qubit.
//!
//! All rates and frequencies are angular (rad/s).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::sweep::SweepResult;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
pub const LANDE_G: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub g: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub kappa_wg: f64,
    pub omega_c: f64,
    /// Zeeman splitting between the two spin transitions.
    pub delta: f64,
}

impl CavityParams {
    pub fn new(
        g: f64,
        gamma: f64,
        kappa: f64,
        kappa_wg: f64,
        omega_c: f64,
        delta: f64,
    ) -> Result<Self> {
        let p = Self {
            g,
            gamma,
            kappa,
            kappa_wg,
            omega_c,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Coupling recovered from a cooperativity, `g = sqrt(C kappa gamma) / 2`,
    /// with the splitting set to [`optimal_splitting`].
    pub fn from_cooperativity(
        cooperativity: f64,
        gamma: f64,
        kappa: f64,
        kappa_wg: f64,
        omega_c: f64,
    ) -> Result<Self> {
        if !(cooperativity >= 0.0) {
            return arg(format!("cooperativity must be >= 0, got {cooperativity}"));
        }
        let g = (cooperativity * kappa * gamma).sqrt() / 2.0;
        let mut p = Self::new(g, gamma, kappa, kappa_wg, omega_c, 0.0)?;
        p.delta = optimal_splitting(&p)?;
        Ok(p)
    }

    /// Rates must be finite, `gamma, kappa > 0`, `g >= 0` and
    /// `0 <= kappa_wg <= kappa`.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g,
            self.gamma,
            self.kappa,
            self.kappa_wg,
            self.omega_c,
            self.delta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return arg("cavity parameters must be finite");
        }
        if self.gamma <= 0.0 || self.kappa <= 0.0 {
            return arg("cavity: gamma and kappa must be positive");
        }
        if self.g < 0.0 || self.delta < 0.0 {
            return arg("cavity: g and delta must be non-negative");
        }
        if self.kappa_wg < 0.0 || self.kappa_wg > self.kappa {
            return arg(format!(
                "cavity: 0 <= kappa_wg <= kappa violated (kappa_wg/kappa = {})",
                self.kappa_wg / self.kappa
            ));
        }
        Ok(())
    }

    pub fn cooperativity(&self) -> f64 {
        4.0 * self.g * self.g / (self.kappa * self.gamma)
    }
}

/// `r = 1 - kappa_wg (i da + gamma/2) / [(i dc + kappa/2)(i da + gamma/2) + g^2]`
/// with `da = atomic_transition - probe` and `dc = omega_c - probe`.
pub fn reflectivity(params: &CavityParams, probe: f64, atomic_transition: f64) -> C64 {
    reflectivity_detuned(params, atomic_transition - probe, params.omega_c - probe)
}

pub fn reflectivity_detuned(p: &CavityParams, delta_a: f64, delta_c: f64) -> C64 {
    let atom = C64::new(p.gamma / 2.0, delta_a);
    let cav = C64::new(p.kappa / 2.0, delta_c);
    C64::new(1.0, 0.0) - p.kappa_wg * atom / (cav * atom + p.g * p.g)
}

/// `Delta = sqrt(2 [g^2 - (gamma/2)(kappa_wg/2 - kappa)])`.
pub fn optimal_splitting(p: &CavityParams) -> Result<f64> {
    let radicand = 2.0 * (p.g * p.g - 0.5 * p.gamma * (0.5 * p.kappa_wg - p.kappa));
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "optimal splitting radicand {radicand:e} <= 0"
        )));
    }
    Ok(radicand.sqrt())
}

/// Field (tesla) producing a Zeeman splitting `delta` (rad/s).
pub fn splitting_to_field(delta: f64) -> f64 {
    HBAR * delta / (BOHR_MAGNETON * LANDE_G)
}

pub fn optimal_field(p: &CavityParams) -> Result<f64> {
    optimal_splitting(p).map(splitting_to_field)
}

/// Fractional deviation of the applied field from its optimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDeviation(f64);

impl FieldDeviation {
    pub const ZERO: FieldDeviation = FieldDeviation(0.0);

    pub fn new(delta_b: f64) -> Result<Self> {
        if !(delta_b > -1.0) || !delta_b.is_finite() {
            return arg(format!("field deviation must exceed -1, got {delta_b}"));
        }
        Ok(Self(delta_b))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionTriple {
    pub r_on: C64,
    pub r_off: C64,
    pub r_m: C64,
}

impl ReflectionTriple {
    pub fn new(r_on: C64, r_off: C64, r_m: C64) -> Result<Self> {
        for (name, r) in [("r_on", r_on), ("r_off", r_off), ("r_m", r_m)] {
            if !(r.norm() <= 1.0 + 1e-9) {
                return arg(format!("|{name}| = {} exceeds 1", r.norm()));
            }
        }
        Ok(Self { r_on, r_off, r_m })
    }

    /// `(+1, -1, -1)`: the lossless Fano limit with a pi-phase mirror.
    pub fn ideal() -> Self {
        Self {
            r_on: C64::new(1.0, 0.0),
            r_off: C64::new(-1.0, 0.0),
            r_m: C64::new(-1.0, 0.0),
        }
    }

    pub fn with_mirror(self, r_m: C64) -> Result<Self> {
        Self::new(self.r_on, self.r_off, r_m)
    }
}

/// Reflection amplitudes at splitting `Delta' = Delta_opt (1 + dB)`, with the
/// cavity centred between the two qubit frequencies `omega_c +/- Delta'/2`.
///
/// Both cavity amplitudes are taken at the probe `omega_c + Delta'/2`:
/// `r_on` with the spin transition resonant, `r_off` with the other
/// transition `Delta'` below it.
pub fn reflection_triple(
    params: &CavityParams,
    dev: FieldDeviation,
    mirror_amplitude: C64,
) -> Result<ReflectionTriple> {
    params.validate()?;
    let split = optimal_splitting(params)? * (1.0 + dev.value());
    reflection_triple_at(params, split, mirror_amplitude)
}

/// As [`reflection_triple`] but at an explicit splitting.
pub fn reflection_triple_at(
    params: &CavityParams,
    splitting: f64,
    mirror_amplitude: C64,
) -> Result<ReflectionTriple> {
    let r_on = reflectivity_detuned(params, 0.0, -splitting / 2.0);
    let r_off = reflectivity_detuned(params, -splitting, -splitting / 2.0);
    ReflectionTriple::new(r_on, r_off, mirror_amplitude)
}

/// `(R_cav, R_m)` with `R_cav` the mean of the two branch reflectances.
pub fn reflection_coefficients(t: &ReflectionTriple) -> (f64, f64) {
    (
        0.5 * (t.r_on.norm_sqr() + t.r_off.norm_sqr()),
        t.r_m.norm_sqr(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    /// Active transition frequency: spin up drives `omega_c + delta/2`,
    /// spin down `omega_c - delta/2`.
    pub fn transition(self, p: &CavityParams) -> f64 {
        match self {
            Spin::Up => p.omega_c + p.delta / 2.0,
            Spin::Down => p.omega_c - p.delta / 2.0,
        }
    }
}

/// Reflectivity spectrum. Rows: `(omega - omega_c)/kappa, Re r, Im r, |r|^2`.
pub fn fano_sweep(params: &CavityParams, spin: Spin, probe_grid: &[f64]) -> Result<SweepResult> {
    params.validate()?;
    if probe_grid.iter().any(|w| !w.is_finite()) {
        return arg("probe grid must be finite");
    }
    if probe_grid.windows(2).any(|w| w[1] < w[0]) {
        return arg("probe grid must be sorted");
    }
    let transition = spin.transition(params);
    let mut out = SweepResult::new(
        format!("fano_{spin:?}").to_lowercase(),
        &["detuning_over_kappa", "re_r", "im_r", "reflectance"],
    );
    for &w in probe_grid {
        let r = reflectivity(params, w, transition);
        out.push(vec![
            (w - params.omega_c) / params.kappa,
            r.re,
            r.im,
            r.norm_sqr(),
        ])?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const KAPPA: f64 = 2.0 * PI * 20.34e9;
    const GAMMA: f64 = 2.0 * PI * 94e6;
    const OMEGA_C: f64 = 2.0 * PI * 406.774e12;

    fn table(c: f64, ratio: f64) -> CavityParams {
        CavityParams::from_cooperativity(c, GAMMA, KAPPA, ratio * KAPPA, OMEGA_C).unwrap()
    }

    #[test]
    fn decoupled_resonant_cavity() {
        let p = CavityParams::new(0.0, GAMMA, KAPPA, KAPPA, OMEGA_C, 0.0).unwrap();
        let r = reflectivity(&p, OMEGA_C, OMEGA_C);
        assert_relative_eq!(r.re, -1.0, epsilon = 1e-12);
        assert!(r.im.abs() < 1e-12);
    }

    #[test]
    fn no_input_coupling_reflects_everything() {
        let p = CavityParams::new(1e9, GAMMA, KAPPA, 0.0, OMEGA_C, 0.0).unwrap();
        for w in [OMEGA_C - 1e11, OMEGA_C, OMEGA_C + 3e10] {
            assert_eq!(reflectivity(&p, w, OMEGA_C), C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn on_resonance_limit() {
        for c in [1e2, 1e3, 1e4] {
            let p = table(c, 1.0);
            let r = reflectivity(&p, OMEGA_C, OMEGA_C);
            assert!((r.re - (c - 1.0) / (c + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn splitting_special_cases() {
        let g = 3.0e9;
        let no_gamma = CavityParams {
            g,
            gamma: 0.0,
            kappa: KAPPA,
            kappa_wg: KAPPA,
            omega_c: 0.0,
            delta: 0.0,
        };
        assert_relative_eq!(
            optimal_splitting(&no_gamma).unwrap(),
            2f64.sqrt() * g,
            max_relative = 1e-15
        );
        let double = CavityParams {
            g,
            gamma: GAMMA,
            kappa: KAPPA,
            kappa_wg: 2.0 * KAPPA,
            omega_c: 0.0,
            delta: 0.0,
        };
        assert_relative_eq!(
            optimal_splitting(&double).unwrap(),
            2f64.sqrt() * g,
            max_relative = 1e-15
        );
        let bad = CavityParams {
            g: 0.0,
            gamma: GAMMA,
            kappa: 1.0,
            kappa_wg: 4.0 * KAPPA,
            omega_c: 0.0,
            delta: 0.0,
        };
        assert!(matches!(optimal_splitting(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn field_is_linear_in_splitting() {
        assert_eq!(splitting_to_field(0.0), 0.0);
        assert_relative_eq!(
            splitting_to_field(2e10),
            2.0 * splitting_to_field(1e10),
            max_relative = 1e-15
        );
    }

    #[test]
    fn coefficients() {
        let c = |re: f64| C64::new(re, 0.0);
        let t = ReflectionTriple::new(c(0.8), c(-0.6), c(-1.0)).unwrap();
        let (rc, rm) = reflection_coefficients(&t);
        assert_relative_eq!(rc, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rm, 1.0);
        assert_eq!(
            reflection_coefficients(&ReflectionTriple::ideal()),
            (1.0, 1.0)
        );
        let z = ReflectionTriple::new(c(0.0), c(0.0), c(0.0)).unwrap();
        assert_eq!(reflection_coefficients(&z), (0.0, 0.0));
        assert!(ReflectionTriple::new(c(1.1), c(0.0), c(0.0)).is_err());
    }

    #[test]
    fn decoupled_spin_has_no_contrast() {
        let p = CavityParams::new(0.0, GAMMA, KAPPA, KAPPA, OMEGA_C, 0.0).unwrap();
        let t = reflection_triple_at(&p, 1e10, C64::new(-1.0, 0.0)).unwrap();
        assert!((t.r_on - t.r_off).norm() < 1e-12);
    }

    #[test]
    fn high_cooperativity_approaches_ideal() {
        let t =
            reflection_triple(&table(1e6, 1.0), FieldDeviation::ZERO, C64::new(-1.0, 0.0)).unwrap();
        assert!((t.r_on - 1.0).norm() < 1e-3);
        assert!((t.r_off + 1.0).norm() < 1e-2);
    }

    #[test]
    fn invalid_params() {
        assert!(CavityParams::new(1.0, GAMMA, KAPPA, 1.01 * KAPPA, OMEGA_C, 0.0).is_err());
        assert!(CavityParams::new(1.0, 0.0, KAPPA, KAPPA, OMEGA_C, 0.0).is_err());
        assert!(FieldDeviation::new(-1.0).is_err());
    }

    #[test]
    fn fano_mirror_symmetry() {
        let p = table(100.0, 0.97);
        let grid: Vec<f64> = (-50..=50)
            .map(|k| OMEGA_C + k as f64 * 0.02 * KAPPA)
            .collect();
        let up = fano_sweep(&p, Spin::Up, &grid).unwrap();
        let down = fano_sweep(&p, Spin::Down, &grid).unwrap();
        let n = grid.len();
        for i in 0..n {
            let (a, b) = (&up.rows[i], &down.rows[n - 1 - i]);
            assert!((a[3] - b[3]).abs() < 1e-9);
            assert!((a[1] - b[1]).abs() < 1e-9);
            assert!((a[2] + b[2]).abs() < 1e-9);
        }
        let far = fano_sweep(&p, Spin::Up, &[OMEGA_C + 1e5 * KAPPA]).unwrap();
        assert!((far.rows[0][3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sweep_reproduces_triple() {
        let p = table(100.0, 0.97);
        let t = reflection_triple(&p, FieldDeviation::ZERO, C64::new(-1.0, 0.0)).unwrap();
        let hi = OMEGA_C + p.delta / 2.0;
        let r = fano_sweep(&p, Spin::Up, &[hi]).unwrap();
        assert!((C64::new(r.rows[0][1], r.rows[0][2]) - t.r_on).norm() < 1e-9);
    }
}
