use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use qram_core::cavity::{reflection_triple, reflectivity_detuned};
use qram_core::filter::{filter_response, CouplerSetting, RingGeometry};
use qram_core::glm::{
    expected_time, expected_time_no_loss_detection, expected_time_recursion, success_probability,
    success_probability_closed_form, LossModel, TreeLayout,
};
use qram_core::protocols::reflection_gate;
use qram_core::teleport::{physical_error_fidelity, ErrorScaling};
use qram_core::{CavityParams, FieldDeviation, Gate, ReflectionTriple, StateVector, C64};

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n).prop_filter_map(
        "zero vector",
        |v| {
            let mut s = StateVector::from_amplitudes(
                v.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
            )
            .ok()?;
            s.normalize().ok()?;
            Some(s)
        },
    )
}

fn u3(theta: f64, phi: f64, lambda: f64) -> Gate {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Gate::new(
        1,
        vec![
            C64::new(c, 0.0),
            -C64::from_polar(s, lambda),
            C64::from_polar(s, phi),
            C64::from_polar(c, phi + lambda),
        ],
    )
    .unwrap()
}

fn chain(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(1e-12..1e-5f64, n),
            prop::collection::vec(0.01..=1.0f64, n),
            0.0..1e-4f64,
        )
    })
}

fn ring() -> RingGeometry {
    RingGeometry::new(50e-6, 2.4, 2.45, 0.0, TAU * 406.774e12).unwrap()
}

proptest! {
    #[test]
    fn unitaries_preserve_norm(
        s in state(3),
        angles in prop::collection::vec((0.0..TAU, 0.0..TAU, 0.0..TAU), 1..6),
        target in 0usize..3,
    ) {
        let mut s = s;
        for (k, (t, p, l)) in angles.into_iter().enumerate() {
            s.apply(&u3(t, p, l), &[(target + k) % 3]).unwrap();
            s.apply(&Gate::cnot(), &[(target + k) % 3, (target + k + 1) % 3]).unwrap();
        }
        prop_assert!(s.is_normalized(1e-12));
    }

    #[test]
    fn passive_reflection_never_gains_norm(
        s in state(2),
        c in 1.0..1e3f64,
        ratio in 0.5..1.0f64,
        db in -0.5..0.5f64,
        mirror in 0.0..1.0f64,
    ) {
        let k = TAU * 20.34e9;
        let p = CavityParams::from_cooperativity(c, TAU * 94e6, k, ratio * k, TAU * 406.774e12).unwrap();
        let t = reflection_triple(&p, FieldDeviation::new(db).unwrap(), C64::new(-mirror, 0.0)).unwrap();
        let mut s = s;
        let survival = s.apply(&reflection_gate(&t).unwrap(), &[0, 1]);
        if let Ok(kept) = survival {
            prop_assert!(kept <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn cavity_reflectance_bounded(c in 0.0..1e4f64, ratio in 0.0..1.0f64, da in -1e11..1e11f64, dc in -1e11..1e11f64) {
        let k = TAU * 20.34e9;
        let g = (c * k * TAU * 94e6).sqrt() / 2.0;
        let p = CavityParams::new(g, TAU * 94e6, k, ratio * k, TAU * 406.774e12, 0.0).unwrap();
        prop_assert!(reflectivity_detuned(&p, da, dc).norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn filter_conserves_energy(phi_i in -PI..PI, phi_m in -PI..PI, x in -0.5..0.5f64, nu in 0.0..1.0f64) {
        let g = ring();
        let input = CouplerSetting::new(nu, phi_i, 0.0).unwrap();
        let mirror = CouplerSetting::half_wave(phi_m, &g);
        if let Ok(r) = filter_response(g.omega_ref + x * g.free_spectral_range(), &input, &mirror, &g) {
            prop_assert!((r.s_out.norm_sqr() + r.s_m.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_matches_recursion((t, p, tau) in chain(10)) {
        let a = expected_time(&t, &p, tau).unwrap();
        let b = expected_time_recursion(&t, &p, tau).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn two_layer_special_case(t1 in 1e-12..1e-5f64, t2 in 1e-12..1e-5f64, p1 in 0.01..=1.0f64, p2 in 0.01..=1.0f64, tau in 0.0..1e-4f64) {
        let want = (t1 + p1 * t2 + (1.0 - p1 * p2) * tau) / (p1 * p2);
        let got = expected_time(&[t1, t2], &[p1, p2], tau).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn loss_detection_dominates((t, p, tau) in chain(12)) {
        let ld = expected_time(&t, &p, tau).unwrap();
        let no = expected_time_no_loss_detection(&t, &p, tau).unwrap();
        prop_assert!(ld <= no * (1.0 + 1e-12));
        if p.iter().all(|&x| x == 1.0) {
            prop_assert!((ld - no).abs() <= 1e-12 * no);
        }
    }

    #[test]
    fn success_probability_identity(
        depth in 1usize..=16,
        straight in 0.0..20.0f64,
        bend in 0.0..50.0f64,
        r_cav in 0.5..=1.0f64,
        r_m in 0.5..=1.0f64,
    ) {
        let tree = TreeLayout::default().tree(depth).unwrap();
        let loss = LossModel { propagation_loss_straight: straight, propagation_loss_bend: bend, r_cav, r_m, ..LossModel::default() };
        let a = success_probability(&tree, &loss).unwrap();
        let b = success_probability_closed_form(&tree, &loss).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn all_active_fidelity_decreases(n in 1usize..20, eps in 1e-6..1e-2f64) {
        let a = physical_error_fidelity(n, eps, ErrorScaling::AllActive).unwrap();
        let b = physical_error_fidelity(n + 1, eps, ErrorScaling::AllActive).unwrap();
        prop_assert!(b < a || a == 0.0);
    }
}

#[test]
fn lossless_limit_is_exact() {
    let t = [1e-9, 2e-9, 3e-9];
    let a = expected_time(&t, &[1.0; 3], 5e-6).unwrap();
    let b = expected_time_no_loss_detection(&t, &[1.0; 3], 5e-6).unwrap();
    assert!((a - b).abs() < 1e-24 && (a - 6e-9).abs() < 1e-20);
}

#[test]
fn ideal_reflection_is_minus_cz() {
    let g = reflection_gate(&ReflectionTriple::ideal()).unwrap();
    let mut want = Gate::cz().matrix().to_vec();
    want.iter_mut().for_each(|x| *x = -*x);
    for (a, b) in g.matrix().iter().zip(&want) {
        assert!((a - b).norm() < 1e-15);
    }
}
