//! Transfer-matrix model of a ring resonator coupled through two
//! Mach-Zehnder couplers: an input coupler facing the bus waveguide and a
//! mirror coupler facing the cavity arm.
//!
//! Each coupler is an MZI of two balanced-by-default directional couplers
//! with through amplitude `nu`, a phase shifter `delta_phi` and an arm
//! imbalance `delta_l`. The resonator-side arm of each coupler is counted as
//! part of the ring circumference, so its propagation phase is carried by
//! the round-trip phase rather than by the coupler matrix.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::sweep::SweepResult;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const SINGULAR: f64 = 1e-12;

pub type Matrix2 = [[C64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerSetting {
    pub nu: f64,
    pub delta_phi: f64,
    pub delta_l: f64,
}

impl CouplerSetting {
    pub fn new(nu: f64, delta_phi: f64, delta_l: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&nu) {
            return arg(format!("coupler nu must lie in [0, 1], got {nu}"));
        }
        if !delta_phi.is_finite() || !delta_l.is_finite() {
            return arg("coupler phases and lengths must be finite");
        }
        Ok(Self {
            nu,
            delta_phi,
            delta_l,
        })
    }

    /// 50:50 couplers and equal arms.
    pub fn balanced(delta_phi: f64) -> Self {
        Self {
            nu: FRAC_1_SQRT_2,
            delta_phi,
            delta_l: 0.0,
        }
    }

    /// 50:50 couplers with a half-wave arm imbalance at the ring's reference
    /// frequency, so that `delta_phi = 0` is the bar state.
    pub fn half_wave(delta_phi: f64, ring: &RingGeometry) -> Self {
        Self {
            nu: FRAC_1_SQRT_2,
            delta_phi,
            delta_l: PI * SPEED_OF_LIGHT / (ring.n_eff * ring.omega_ref),
        }
    }

    pub fn with_phase(self, delta_phi: f64) -> Self {
        Self { delta_phi, ..self }
    }

    /// Differential phase `k(omega) delta_l + delta_phi`.
    pub fn phase(&self, ring: &RingGeometry, omega: f64) -> f64 {
        ring.wavenumber(omega) * self.delta_l + self.delta_phi
    }

    /// `zeta = nu^2 - e^{i phi} (1 - nu^2)`, the ring-to-ring element.
    pub fn zeta(&self, ring: &RingGeometry, omega: f64) -> C64 {
        let e = C64::from_polar(1.0, self.phase(ring, omega));
        self.nu * self.nu - e * (1.0 - self.nu * self.nu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingGeometry {
    pub circumference: f64,
    pub ring_radius: f64,
    pub n_eff: f64,
    pub n_g: f64,
    pub delta_phi_r: f64,
    pub omega_ref: f64,
}

impl RingGeometry {
    /// Circular ring of radius `ring_radius` (circumference `2 pi R`).
    pub fn new(
        ring_radius: f64,
        n_eff: f64,
        n_g: f64,
        delta_phi_r: f64,
        omega_ref: f64,
    ) -> Result<Self> {
        let g = Self {
            circumference: TAU * ring_radius,
            ring_radius,
            n_eff,
            n_g,
            delta_phi_r,
            omega_ref,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.circumference > 0.0) || !self.circumference.is_finite() {
            return arg("ring circumference must be positive");
        }
        if !(self.n_eff > 1.0 && self.n_g > 1.0) {
            return arg("ring indices must exceed 1");
        }
        if !(self.omega_ref > 0.0) || !self.delta_phi_r.is_finite() {
            return arg("ring reference frequency must be positive");
        }
        Ok(())
    }

    pub fn with_bias(self, delta_phi_r: f64) -> Self {
        Self {
            delta_phi_r,
            ..self
        }
    }

    /// First-order dispersion `k = (n_eff omega_ref + n_g (omega - omega_ref)) / c`.
    pub fn wavenumber(&self, omega: f64) -> f64 {
        (self.n_eff * self.omega_ref + self.n_g * (omega - self.omega_ref)) / SPEED_OF_LIGHT
    }

    /// Round-trip phase `k L_c + delta_phi_r` (unwrapped).
    pub fn round_trip_phase(&self, omega: f64) -> f64 {
        self.wavenumber(omega) * self.circumference + self.delta_phi_r
    }

    pub fn free_spectral_range(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / (self.n_g * self.circumference)
    }
}

/// MZI transfer matrix
/// `[[(1+e)nu^2 - 1, i(1+e) nu mu], [i(1+e) nu mu, nu^2 - e mu^2]]`, `e = e^{i phi}`.
pub fn mzi_transfer(setting: &CouplerSetting, ring: &RingGeometry, omega: f64) -> Matrix2 {
    mzi_matrix(setting.nu, setting.phase(ring, omega))
}

pub fn mzi_matrix(nu: f64, phi: f64) -> Matrix2 {
    let mu = (1.0 - nu * nu).sqrt();
    let e = C64::from_polar(1.0, phi);
    let a = C64::new(1.0, 0.0) + e;
    let off = C64::new(0.0, 1.0) * a * nu * mu;
    [[a * nu * nu - 1.0, off], [off, nu * nu - e * mu * mu]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FilterResponse {
    pub s_out: C64,
    pub s_m: C64,
    /// Circulating amplitude leaving the input coupler toward the mirror side.
    pub s_ring: C64,
}

/// Steady-state response to `s_in = 1` with nothing entering from the mirror
/// port. The ring round trip is split evenly between the two half-rings.
pub fn filter_response(
    omega: f64,
    input: &CouplerSetting,
    mirror: &CouplerSetting,
    ring: &RingGeometry,
) -> Result<FilterResponse> {
    let ti = mzi_transfer(input, ring, omega);
    let tm = mzi_transfer(mirror, ring, omega);
    let phi_c = ring.round_trip_phase(omega);
    let half = C64::from_polar(1.0, phi_c / 2.0);
    let loop_gain = half * tm[1][1] * half * ti[1][1];
    let denom = C64::new(1.0, 0.0) - loop_gain;
    if denom.norm() < SINGULAR {
        return Err(Error::Singularity(denom.norm()));
    }
    let s_ring = ti[1][0] / denom;
    let s_out = ti[0][0] + ti[0][1] * half * tm[1][1] * half * s_ring;
    let s_m = tm[0][1] * half * s_ring;
    Ok(FilterResponse { s_out, s_m, s_ring })
}

fn loop_gain(
    omega: f64,
    input: &CouplerSetting,
    mirror: &CouplerSetting,
    ring: &RingGeometry,
) -> C64 {
    C64::from_polar(1.0, ring.round_trip_phase(omega))
        * input.zeta(ring, omega)
        * mirror.zeta(ring, omega)
}

/// Ring resonance closest to `omega_ref`: the frequency where the loop gain
/// `e^{i phi_c} zeta_i zeta_m` is real and positive.
pub fn resonance_frequency(
    input: &CouplerSetting,
    mirror: &CouplerSetting,
    ring: &RingGeometry,
) -> Result<f64> {
    ring.validate()?;
    if loop_gain(ring.omega_ref, input, mirror, ring).norm() < 1e-9 {
        return Err(Error::Search(
            "ring is fully over-coupled, no resonance feature".into(),
        ));
    }
    let fsr = ring.free_spectral_range();
    let h = 1e-6 * fsr;
    let mut w = ring.omega_ref;
    for _ in 0..100 {
        let f = loop_gain(w, input, mirror, ring).arg();
        if f.abs() < 1e-13 {
            return Ok(w);
        }
        let df = (loop_gain(w + h, input, mirror, ring) / loop_gain(w - h, input, mirror, ring))
            .arg()
            / (2.0 * h);
        if !(df > 0.0) || !df.is_finite() {
            break;
        }
        let step = (f / df).clamp(-0.25 * fsr, 0.25 * fsr);
        w -= step;
        if step.abs() < 1e-15 * w.abs() {
            return Ok(w);
        }
    }
    Err(Error::Search("resonance iteration did not converge".into()))
}

/// Bias `delta_phi_r` in `[0, 2 pi)` that places a resonance exactly at
/// `omega_ref` for the given couplers.
pub fn resonant_bias(input: &CouplerSetting, mirror: &CouplerSetting, ring: &RingGeometry) -> f64 {
    let unbiased = ring.with_bias(0.0);
    (-loop_gain(ring.omega_ref, input, mirror, &unbiased).arg()).rem_euclid(TAU)
}

/// Circulating power `|s_ring|^2`.
pub fn ring_power(
    omega: f64,
    input: &CouplerSetting,
    mirror: &CouplerSetting,
    ring: &RingGeometry,
) -> Result<f64> {
    Ok(filter_response(omega, input, mirror, ring)?
        .s_ring
        .norm_sqr())
}

/// Loaded linewidth (rad/s): full width at half maximum of the circulating
/// power around the resonance nearest `omega_ref`. The through port of a
/// bar-state mirror is all-pass, so it has no dip to measure.
pub fn resonator_linewidth(
    input: &CouplerSetting,
    mirror: &CouplerSetting,
    ring: &RingGeometry,
) -> Result<f64> {
    let w0 = resonance_frequency(input, mirror, ring)?;
    let peak = ring_power(w0, input, mirror, ring)?;
    let half = 0.5 * peak;
    let fsr = ring.free_spectral_range();
    let rho = (input.zeta(ring, w0) * mirror.zeta(ring, w0)).norm();
    let slope = ring.n_g * ring.circumference / SPEED_OF_LIGHT;
    let guess = (2.0 * (1.0 - rho) / rho.sqrt() / slope).max(1e-9 * fsr);

    let edge = |sign: f64| -> Result<f64> {
        let mut inner = 0.0;
        let mut outer = 0.5 * guess;
        loop {
            let limit = 0.5 * fsr;
            outer = outer.min(limit);
            if ring_power(w0 + sign * outer, input, mirror, ring)? < half {
                break;
            }
            if outer >= limit {
                return Err(Error::Search(
                    "no half-maximum crossing within half a free spectral range".into(),
                ));
            }
            inner = outer;
            outer *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if ring_power(w0 + sign * mid, input, mirror, ring)? < half {
                outer = mid;
            } else {
                inner = mid;
            }
            if outer - inner <= 1e-12 * outer {
                break;
            }
        }
        Ok(0.5 * (inner + outer))
    };
    Ok(edge(1.0)? + edge(-1.0)?)
}

/// Single-pass phase `k(omega) L_c + delta_phi_r`, wrapped to `[0, 2 pi)`.
pub fn single_pass_phase(ring: &RingGeometry, omega: f64) -> f64 {
    ring.round_trip_phase(omega).rem_euclid(TAU)
}

/// Bias `delta_phi_r` in `[0, 2 pi)` giving a single-pass phase of `pi/2` at
/// `omega_ref`.
pub fn solve_single_pass_bias(ring: &RingGeometry) -> f64 {
    (PI / 2.0 - ring.wavenumber(ring.omega_ref) * ring.circumference).rem_euclid(TAU)
}

/// `|s_m|^2` and `|s_out|^2` on resonance over a rectangular phase grid.
/// Rows: `dphi_i, dphi_m, |s_m|^2, |s_out|^2, omega_res`. Points without a
/// resonance feature (a fully transmitting input coupler) are evaluated at
/// `omega_ref`.
pub fn routing_phase_condition(
    phis_i: &[f64],
    phis_m: &[f64],
    input: &CouplerSetting,
    mirror: &CouplerSetting,
    ring: &RingGeometry,
) -> Result<SweepResult> {
    use rayon::prelude::*;
    let points: Vec<(f64, f64)> = phis_i
        .iter()
        .flat_map(|&a| phis_m.iter().map(move |&b| (a, b)))
        .collect();
    let rows: Result<Vec<Vec<f64>>> = points
        .par_iter()
        .map(|&(a, b)| {
            let (ci, cm) = (input.with_phase(a), mirror.with_phase(b));
            let w = match resonance_frequency(&ci, &cm, ring) {
                Ok(w) => w,
                Err(Error::Search(_)) => ring.omega_ref,
                Err(e) => return Err(e),
            };
            let r = filter_response(w, &ci, &cm, ring)?;
            Ok(vec![a, b, r.s_m.norm_sqr(), r.s_out.norm_sqr(), w])
        })
        .collect();
    let mut out = SweepResult::new(
        "routing_phase_condition",
        &[
            "dphi_i",
            "dphi_m",
            "drop_power",
            "through_power",
            "omega_res",
        ],
    );
    for r in rows? {
        out.push(r)?;
    }
    Ok(out)
}

/// Loaded linewidth versus input phase in setting mode
/// (`dphi_m = pi - dphi_i`) and routing mode (`dphi_m = 0`), both with
/// half-wave mirror couplers. Rows: `dphi_i`, then rad/s and GHz for each
/// mode; `NaN` where no resonance is found.
pub fn linewidth_sweep(phis_i: &[f64], ring: &RingGeometry) -> Result<SweepResult> {
    use rayon::prelude::*;
    ring.validate()?;
    let width = |input: &CouplerSetting, mirror: &CouplerSetting| -> Result<f64> {
        match resonator_linewidth(input, mirror, ring) {
            Ok(w) => Ok(w),
            Err(Error::Search(_)) => Ok(f64::NAN),
            Err(e) => Err(e),
        }
    };
    let rows: Result<Vec<Vec<f64>>> = phis_i
        .par_iter()
        .map(|&a| {
            let input = CouplerSetting::balanced(a);
            let setting = width(&input, &CouplerSetting::half_wave(PI - a, ring))?;
            let routing = width(&input, &CouplerSetting::half_wave(0.0, ring))?;
            Ok(vec![
                a,
                setting,
                setting / TAU / 1e9,
                routing,
                routing / TAU / 1e9,
            ])
        })
        .collect();
    let mut out = SweepResult::new(
        "linewidth",
        &[
            "dphi_i",
            "setting_rad_s",
            "setting_ghz",
            "routing_rad_s",
            "routing_ghz",
        ],
    );
    for r in rows? {
        out.push(r)?;
    }
    Ok(out)
}
