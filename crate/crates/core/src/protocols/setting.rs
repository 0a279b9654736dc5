//! Photon-to-spin setting, spin-to-photon readout, routing interferometer and
//! the six-state transfer fidelity.

use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;

use super::{
    check_normalized, reflection_gate, HeraldOutcome, Port, SignConvention, SixStateFidelity,
};
use crate::cavity::{reflection_triple, CavityParams, FieldDeviation, ReflectionTriple};
use crate::error::{Error, Result};
use crate::quantum::{Gate, Pauli, StateVector};
use crate::sweep::SweepResult;
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct SettingOutcome {
    pub omega0: HeraldOutcome,
    pub omega1: HeraldOutcome,
    pub loss_probability: f64,
}

impl SettingOutcome {
    pub fn herald(&self, bit: u8) -> &HeraldOutcome {
        if bit == 0 {
            &self.omega0
        } else {
            &self.omega1
        }
    }

    pub fn heralded_probability(&self) -> f64 {
        self.omega0.probability + self.omega1.probability
    }
}

/// Applies a reflection and returns the survival probability, leaving the
/// state normalized unless nothing survives.
fn reflect(
    state: &mut StateVector,
    t: &ReflectionTriple,
    photon: usize,
    spin: usize,
) -> Result<f64> {
    match state.apply(&reflection_gate(t)?, &[photon, spin]) {
        Err(Error::Degenerate(_)) => Ok(0.0),
        other => other,
    }
}

/// Splits `state` on the photon detector and finishes each branch.
fn herald_branches<F>(
    state: &StateVector,
    survival: f64,
    photon: usize,
    keep: &[usize],
    mut finish: F,
) -> Result<SettingOutcome>
where
    F: FnMut(u8, &mut StateVector) -> Result<Vec<Pauli>>,
{
    let mut out = [
        HeraldOutcome::none(Port::Omega0),
        HeraldOutcome::none(Port::Omega1),
    ];
    if survival > 0.0 {
        for bit in 0..2u8 {
            let (p, branch) = state.branch(photon, bit)?;
            if let Some(mut s) = branch {
                let corrections = finish(bit, &mut s)?;
                out[bit as usize] = HeraldOutcome {
                    port: Port::from_bit(bit),
                    probability: survival * p,
                    post_state: Some(s.extract(keep)?),
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

/// Transfers `alpha|w0> + beta|w1>` onto a spin prepared in `|+>`:
/// reflection, photon Hadamard, detection, spin Hadamard, and a Z fix-up on
/// the port selected by the default [`SignConvention`].
pub fn setting_step(alpha: C64, beta: C64, triple: &ReflectionTriple) -> Result<SettingOutcome> {
    setting_step_with(alpha, beta, triple, SignConvention::default())
}

pub fn setting_step_with(
    alpha: C64,
    beta: C64,
    triple: &ReflectionTriple,
    convention: SignConvention,
) -> Result<SettingOutcome> {
    check_normalized(alpha, beta)?;
    // qubit 0 photon, qubit 1 spin
    let mut state =
        StateVector::qubit(alpha, beta)?.tensor(&StateVector::new_basis_state(1, 0)?)?;
    state.apply(&Gate::h(), &[1])?;
    let survival = reflect(&mut state, triple, 0, 1)?;
    if survival > 0.0 {
        state.apply(&Gate::h(), &[0])?;
    }
    herald_branches(&state, survival, 0, &[1], |bit, s| {
        s.apply(&Gate::h(), &[1])?;
        if bit == convention.z_port() {
            s.apply(&Gate::z(), &[1])?;
            Ok(vec![Pauli::Z])
        } else {
            Ok(Vec::new())
        }
    })
}

/// The six Bloch-axis inputs `|d>, |u>, (|d> +/- |u>)/sqrt2, (|d> +/- i|u>)/sqrt2`.
pub fn six_state_inputs() -> [(C64, C64); 6] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let ih = C64::new(0.0, FRAC_1_SQRT_2);
    [
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        (h, h),
        (h, -h),
        (h, ih),
        (h, -ih),
    ]
}

pub fn transfer_fidelity(triple: &ReflectionTriple) -> Result<SixStateFidelity> {
    transfer_fidelity_with(triple, SignConvention::default())
}

/// Per input, the herald-probability weighted fidelity of the corrected spin
/// state, conditioned on a click.
pub fn transfer_fidelity_with(
    triple: &ReflectionTriple,
    convention: SignConvention,
) -> Result<SixStateFidelity> {
    let mut per_state = [0.0; 6];
    for (slot, (a, b)) in per_state.iter_mut().zip(six_state_inputs()) {
        let target = StateVector::qubit(a, b)?;
        let out = setting_step_with(a, b, triple, convention)?;
        let total = out.heralded_probability();
        if !(total > 0.0) {
            return Err(Error::Degenerate(
                "no herald probability for this triple".into(),
            ));
        }
        let mut f = 0.0;
        for h in [&out.omega0, &out.omega1] {
            if let Some(s) = &h.post_state {
                f += h.probability * s.overlap_fidelity(&target)?;
            }
        }
        *slot = f / total;
    }
    Ok(SixStateFidelity::from_states(per_state))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section search of `|r_m|` on `[0, 1]` (tolerance 1e-4) maximizing
/// the mean six-state fidelity; the mirror phase follows `convention`.
pub fn optimize_mirror(
    r_on: C64,
    r_off: C64,
    convention: SignConvention,
) -> Result<(f64, SixStateFidelity)> {
    let eval = |x: f64| -> Result<SixStateFidelity> {
        let t = ReflectionTriple::new(r_on, r_off, C64::new(convention.mirror_sign() * x, 0.0))?;
        transfer_fidelity_with(&t, convention)
    };
    let score = |x: f64| eval(x).map(|f| f.mean).unwrap_or(0.0);

    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    while b - a > 1e-4 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = score(d);
        }
    }
    let mid = 0.5 * (a + b);
    let best = [mid, 1.0]
        .into_iter()
        .map(|x| (x, score(x)))
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .map(|p| p.0)
        .unwrap_or(mid);
    Ok((best, eval(best)?))
}

/// Reflection triple at `dev` with the fidelity-optimal mirror amplitude.
pub fn optimized_triple(
    params: &CavityParams,
    dev: FieldDeviation,
    convention: SignConvention,
) -> Result<(ReflectionTriple, SixStateFidelity)> {
    let t = reflection_triple(params, dev, C64::new(convention.mirror_sign(), 0.0))?;
    let (x, fid) = optimize_mirror(t.r_on, t.r_off, convention)?;
    Ok((
        t.with_mirror(C64::new(convention.mirror_sign() * x, 0.0))?,
        fid,
    ))
}

/// Mean six-state fidelity over a (C, kappa_wg/kappa) grid at field deviation
/// `dev`, with `|r_m|` optimized per point. `base` supplies gamma, kappa and
/// omega_c. Rows: `C, kappa_wg/kappa, dB, |r_m|, F`.
pub fn fidelity_contour(
    c_grid: &[f64],
    coupling_grid: &[f64],
    dev: FieldDeviation,
    base: &CavityParams,
    convention: SignConvention,
) -> Result<SweepResult> {
    let points: Vec<(f64, f64)> = c_grid
        .iter()
        .flat_map(|&c| coupling_grid.iter().map(move |&k| (c, k)))
        .collect();
    let rows: Result<Vec<Vec<f64>>> = points
        .par_iter()
        .map(|&(c, ratio)| {
            let p = CavityParams::from_cooperativity(
                c,
                base.gamma,
                base.kappa,
                ratio * base.kappa,
                base.omega_c,
            )?;
            let (t, fid) = optimized_triple(&p, dev, convention)?;
            Ok(vec![c, ratio, dev.value(), t.r_m.norm(), fid.mean])
        })
        .collect();
    let mut out = SweepResult::new(
        "fidelity_contour",
        &[
            "cooperativity",
            "kappa_wg_over_kappa",
            "delta_b",
            "mirror_abs",
            "fidelity",
        ],
    );
    for r in rows? {
        out.push(r)?;
    }
    Ok(out)
}

/// Output (top, bottom) amplitudes of the routing interferometer for
/// arm amplitudes `cavity` and `mirror`: `((A + M)/2, i(A - M)/2)`.
pub fn route_through_interferometer(cavity: C64, mirror: C64) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    ((cavity + mirror) * 0.5, i * (cavity - mirror) * 0.5)
}

/// Lossless routing with net relative arm phase `phi`:
/// `e^{i phi/2} (cos(phi/2), -sin(phi/2))`.
pub fn routing_step(phi: f64) -> (C64, C64) {
    route_through_interferometer(C64::from_polar(1.0, phi), C64::new(1.0, 0.0))
}

/// Maps a spin state onto a photon through two ancilla photons: the first
/// photon reflects, the spin is measured out by a second reflected photon,
/// and a Z fix-up on the first photon follows an `w1` click on the second.
/// The returned post states are those of the first photon.
pub fn spin_to_photon(alpha: C64, beta: C64, triple: &ReflectionTriple) -> Result<SettingOutcome> {
    spin_to_photon_with(alpha, beta, triple, SignConvention::default())
}

/// [`spin_to_photon`] under an explicit mirror convention. With an in-phase
/// mirror the first photon also needs an X.
pub fn spin_to_photon_with(
    alpha: C64,
    beta: C64,
    triple: &ReflectionTriple,
    convention: SignConvention,
) -> Result<SettingOutcome> {
    check_normalized(alpha, beta)?;
    // qubit 0 spin, 1 first photon, 2 second photon
    let mut state =
        StateVector::qubit(alpha, beta)?.tensor(&StateVector::new_basis_state(2, 0)?)?;
    state.apply(&Gate::h(), &[1])?;
    let mut survival = reflect(&mut state, triple, 1, 0)?;
    if survival > 0.0 {
        state.apply(&Gate::h(), &[0])?;
        state.apply(&Gate::h(), &[1])?;
        state.apply(&Gate::h(), &[2])?;
        survival *= reflect(&mut state, triple, 2, 0)?;
    }
    if survival > 0.0 {
        state.apply(&Gate::h(), &[2])?;
    }
    herald_branches(&state, survival, 2, &[1], |bit, s| {
        let mut fix = Vec::new();
        if convention == SignConvention::InPhaseMirror {
            s.apply(&Gate::x(), &[1])?;
            fix.push(Pauli::X);
        }
        if bit == convention.z_port() {
            s.apply(&Gate::z(), &[1])?;
            fix.push(Pauli::Z);
        }
        Ok(fix)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn ideal_setting_is_exact() {
        let t = ReflectionTriple::ideal();
        for (a, b) in six_state_inputs() {
            let out = setting_step(a, b, &t).unwrap();
            assert!(out.loss_probability.abs() < 1e-12);
            let target = StateVector::qubit(a, b).unwrap();
            for bit in 0..2 {
                let h = out.herald(bit);
                assert!((h.probability - 0.5).abs() < 1e-12);
                let f = h
                    .post_state
                    .as_ref()
                    .unwrap()
                    .overlap_fidelity(&target)
                    .unwrap();
                assert!((f - 1.0).abs() < 1e-12);
            }
        }
        assert!((transfer_fidelity(&t).unwrap().mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn in_phase_convention_is_exact_for_its_ideal() {
        let conv = SignConvention::InPhaseMirror;
        let f = transfer_fidelity_with(&conv.ideal_triple(), conv).unwrap();
        assert!((f.mean - 1.0).abs() < 1e-12);
        let out = setting_step_with(c(1.0), c(0.0), &conv.ideal_triple(), conv).unwrap();
        assert_eq!(out.omega0.corrections, vec![Pauli::Z]);
    }

    #[test]
    fn no_fano_contrast_gives_down_on_w0() {
        let r = C64::from_polar(0.9, 0.3);
        let t = ReflectionTriple::new(r, r, c(-1.0)).unwrap();
        let out = setting_step(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), &t).unwrap();
        let s = out.omega0.post_state.unwrap();
        assert!((s.amplitude(0).norm() - 1.0).abs() < 1e-12);
        let plus = StateVector::qubit(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)).unwrap();
        assert!((s.overlap_fidelity(&plus).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn balanced_reflectivities_preserve_plus() {
        let t = ReflectionTriple::new(c(0.8), c(-0.8), c(-0.8)).unwrap();
        let out = setting_step(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), &t).unwrap();
        let plus = StateVector::qubit(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)).unwrap();
        let f = out
            .omega0
            .post_state
            .unwrap()
            .overlap_fidelity(&plus)
            .unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert!((out.loss_probability - 0.36).abs() < 1e-12);
    }

    #[test]
    fn down_input_is_always_faithful() {
        let t = ReflectionTriple::new(
            C64::from_polar(0.7, 1.0),
            C64::from_polar(0.4, -2.0),
            c(-0.3),
        )
        .unwrap();
        let f = transfer_fidelity(&t).unwrap();
        assert!((f.per_state[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn common_phase_keeps_unit_fidelity() {
        let e = C64::from_polar(1.0, 0.77);
        let t = ReflectionTriple::new(e, -e, -e).unwrap();
        assert!((transfer_fidelity(&t).unwrap().mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triple() {
        let t = ReflectionTriple::new(c(0.0), c(0.0), c(0.0)).unwrap();
        assert!(matches!(transfer_fidelity(&t), Err(Error::Degenerate(_))));
        let out = setting_step(c(1.0), c(0.0), &t).unwrap();
        assert_eq!(out.loss_probability, 1.0);
    }

    #[test]
    fn unnormalized_input_rejected() {
        assert!(setting_step(c(1.0), c(1.0), &ReflectionTriple::ideal()).is_err());
    }

    #[test]
    fn routing_ports() {
        let (t, b) = routing_step(0.0);
        assert!((t.norm_sqr() - 1.0).abs() < 1e-15 && b.norm_sqr() < 1e-15);
        let (t, b) = routing_step(PI);
        assert!(t.norm_sqr() < 1e-15 && (b.norm_sqr() - 1.0).abs() < 1e-15);
        let (t, b) = routing_step(PI / 2.0);
        assert!((t.norm_sqr() - 0.5).abs() < 1e-15 && (b.norm_sqr() - 0.5).abs() < 1e-15);

        let ideal = ReflectionTriple::ideal();
        let (t, _) = route_through_interferometer(ideal.r_off, ideal.r_m);
        assert!((t.norm_sqr() - 1.0).abs() < 1e-15);
        let (_, b) = route_through_interferometer(ideal.r_on, ideal.r_m);
        assert!((b.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spin_to_photon_ideal() {
        for conv in [SignConvention::PiMirror, SignConvention::InPhaseMirror] {
            let t = conv.ideal_triple();
            for (a, b) in six_state_inputs() {
                let out = spin_to_photon_with(a, b, &t, conv).unwrap();
                let target = StateVector::qubit(a, b).unwrap();
                assert!(out.loss_probability.abs() < 1e-12);
                for bit in 0..2 {
                    let s = out.herald(bit).post_state.as_ref().unwrap();
                    assert!((s.overlap_fidelity(&target).unwrap() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let t = ReflectionTriple::ideal();
        let (a, b) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let set = setting_step(a, b, &t).unwrap();
        for bit in 0..2 {
            let spin = set.herald(bit).post_state.as_ref().unwrap();
            let back = spin_to_photon(spin.amplitude(0), spin.amplitude(1), &t).unwrap();
            let target = StateVector::qubit(a, b).unwrap();
            for k in 0..2 {
                let p = back.herald(k).post_state.as_ref().unwrap();
                assert!((p.overlap_fidelity(&target).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }
}
