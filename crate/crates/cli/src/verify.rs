//! Invariant suites run by `qram verify`.

use std::f64::consts::{PI, TAU};

use qram_core::cavity::{optimal_splitting, reflectivity_detuned, Spin};
use qram_core::filter::{filter_response, CouplerSetting, RingGeometry};
use qram_core::glm::{
    expected_time, expected_time_no_loss_detection, expected_time_recursion, simulate_retry_process,
};
use qram_core::protocols::{
    bell_create, expected_query_state, expected_tree_state, full_query_sim, teleport_addresses,
    transfer_fidelity, ForcedOutcomes,
};
use qram_core::quantum::ghz;
use qram_core::teleport::{
    decoherence_fidelity, geometric_mean_duration, mean_query_duration, physical_error_fidelity,
    sample_attempts, simulate_ghz_layer, simulate_timeline, CoherenceModel, ErrorScaling,
    TeleportConfig,
};
use qram_core::{CavityParams, Gate, ReflectionTriple, StateVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Fast,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            _ => Err(CliError::Usage(format!(
                "unknown suite '{s}' (fast or full)"
            ))),
        }
    }
}

type Check = fn(&RunConfig) -> Result<(), String>;

struct Invariant {
    module: &'static str,
    name: &'static str,
    full_only: bool,
    check: Check,
}

const INVARIANTS: &[Invariant] = &[
    Invariant {
        module: "quantum_core",
        name: "unitary gates preserve norm",
        full_only: false,
        check: gates_preserve_norm,
    },
    Invariant {
        module: "cavity_model",
        name: "over-coupled resonance (C-1)/(C+1)",
        full_only: false,
        check: fano_limit,
    },
    Invariant {
        module: "cavity_model",
        name: "spin sweeps mirror about omega_c",
        full_only: false,
        check: spin_mirror,
    },
    Invariant {
        module: "adddrop_filter",
        name: "|s_out|^2 + |s_m|^2 = 1",
        full_only: false,
        check: filter_lossless,
    },
    Invariant {
        module: "transfer_protocols",
        name: "ideal setting fidelity 1",
        full_only: false,
        check: ideal_setting,
    },
    Invariant {
        module: "transfer_protocols",
        name: "bell_create ideal",
        full_only: false,
        check: ideal_bell,
    },
    Invariant {
        module: "transfer_protocols",
        name: "teleport_addresses all branches",
        full_only: false,
        check: teleport_branches,
    },
    Invariant {
        module: "transfer_protocols",
        name: "full_query_sim matches target",
        full_only: false,
        check: query_target,
    },
    Invariant {
        module: "glm_analytics",
        name: "closed form equals recursion",
        full_only: false,
        check: closed_vs_recursion,
    },
    Invariant {
        module: "glm_analytics",
        name: "loss detection never slower",
        full_only: false,
        check: ld_dominance,
    },
    Invariant {
        module: "glm_analytics",
        name: "retry Monte Carlo within 4 sigma (1e4)",
        full_only: false,
        check: retry_mc_small,
    },
    Invariant {
        module: "glm_analytics",
        name: "retry Monte Carlo within 3 sigma (1e6, n<=3)",
        full_only: true,
        check: retry_mc_full,
    },
    Invariant {
        module: "teleport_sim",
        name: "certain links follow critical path",
        full_only: false,
        check: critical_path,
    },
    Invariant {
        module: "teleport_sim",
        name: "geometric attempts (1e5)",
        full_only: true,
        check: geometric_attempts,
    },
    Invariant {
        module: "teleport_sim",
        name: "single pair mean duration (1e5)",
        full_only: true,
        check: ghz_pair_duration,
    },
    Invariant {
        module: "teleport_sim",
        name: "retrieval mean attempts (1e5)",
        full_only: true,
        check: retrieval_attempts,
    },
    Invariant {
        module: "teleport_sim",
        name: "fidelity models anchored",
        full_only: false,
        check: fidelity_models,
    },
    Invariant {
        module: "cli",
        name: "config round trip keeps hash",
        full_only: false,
        check: config_round_trip,
    },
];

/// Runs the suite, calling `report` with one line per invariant, and stops
/// at the first failure.
pub fn run(suite: Suite, cfg: &RunConfig, mut report: impl FnMut(&str)) -> Result<usize, CliError> {
    let mut passed = 0;
    for inv in INVARIANTS
        .iter()
        .filter(|i| suite == Suite::Full || !i.full_only)
    {
        match (inv.check)(cfg) {
            Ok(()) => {
                report(&format!("PASS {}: {}", inv.module, inv.name));
                passed += 1;
            }
            Err(detail) => {
                let msg = format!("{}: {}: {detail}", inv.module, inv.name);
                report(&format!("FAIL {msg}"));
                return Err(CliError::Verify(msg));
            }
        }
    }
    Ok(passed)
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed)
}

fn core(e: qram_core::Error) -> String {
    e.to_string()
}

fn gates_preserve_norm(_: &RunConfig) -> Result<(), String> {
    let mut r = rng();
    for trial in 0..200 {
        let amps: Vec<C64> = (0..8)
            .map(|_| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
            .collect();
        let mut s = StateVector::from_amplitudes(amps).map_err(core)?;
        s.normalize().map_err(core)?;
        let theta = r.random::<f64>() * TAU;
        s.apply(&Gate::phase(theta), &[trial % 3]).map_err(core)?;
        s.apply(&Gate::h(), &[(trial + 1) % 3]).map_err(core)?;
        s.apply(&Gate::cnot(), &[trial % 3, (trial + 2) % 3])
            .map_err(core)?;
        if !s.is_normalized(1e-12) {
            return Err(format!("trial {trial}: norm {}", s.norm_sqr()));
        }
    }
    Ok(())
}

fn fano_limit(cfg: &RunConfig) -> Result<(), String> {
    let b = cfg.cavity_base();
    for c in [1e2, 1e3, 1e4] {
        let p = CavityParams::from_cooperativity(c, b.gamma, b.kappa, b.kappa, b.omega_c)
            .map_err(core)?;
        let r = reflectivity_detuned(&p, 0.0, 0.0);
        let want = (c - 1.0) / (c + 1.0);
        if (r.re - want).abs() > 10.0 / c || r.im.abs() > 10.0 / c {
            return Err(format!("C={c}: r={r}, expected {want}"));
        }
    }
    Ok(())
}

fn spin_mirror(cfg: &RunConfig) -> Result<(), String> {
    let p = cfg
        .cavity_params(cfg.cavity.cooperativity, cfg.cavity.kappa_wg_over_kappa)
        .map_err(|e| e.to_string())?;
    let (up, down) = (Spin::Up.transition(&p), Spin::Down.transition(&p));
    for x in [-1.3, -0.4, 0.0, 0.2, 0.9] {
        let d = x * p.kappa;
        let a = qram_core::cavity::reflectivity(&p, p.omega_c + d, up);
        let b = qram_core::cavity::reflectivity(&p, p.omega_c - d, down);
        if (a.norm_sqr() - b.norm_sqr()).abs() > 1e-9 {
            return Err(format!("detuning {x} kappa: {a} vs {b}"));
        }
    }
    optimal_splitting(&p).map(|_| ()).map_err(core)
}

fn filter_lossless(cfg: &RunConfig) -> Result<(), String> {
    let ring: RingGeometry = cfg.ring().map_err(|e| e.to_string())?;
    let mut r = rng();
    for _ in 0..200 {
        let i = CouplerSetting::balanced(r.random::<f64>() * TAU - PI);
        let m = CouplerSetting::half_wave(r.random::<f64>() * TAU - PI, &ring);
        let w = ring.omega_ref + (r.random::<f64>() - 0.5) * ring.free_spectral_range();
        match filter_response(w, &i, &m, &ring) {
            Ok(resp) => {
                let total = resp.s_out.norm_sqr() + resp.s_m.norm_sqr();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(format!("omega={w}: total {total}"));
                }
            }
            Err(qram_core::Error::Singularity(_)) => {}
            Err(e) => return Err(core(e)),
        }
    }
    Ok(())
}

fn ideal_setting(_: &RunConfig) -> Result<(), String> {
    let f = transfer_fidelity(&ReflectionTriple::ideal())
        .map_err(core)?
        .mean;
    if (f - 1.0).abs() > 1e-12 {
        return Err(format!("mean fidelity {f}"));
    }
    Ok(())
}

fn ideal_bell(_: &RunConfig) -> Result<(), String> {
    let t = ReflectionTriple::ideal();
    let out = bell_create(&t, &t).map_err(core)?;
    let phi = ghz(2).map_err(core)?;
    for bit in 0..2 {
        let s = out
            .herald(bit)
            .post_state
            .as_ref()
            .ok_or("port never clicks")?;
        let f = s.overlap_fidelity(&phi).map_err(core)?;
        if (f - 1.0).abs() > 1e-10 {
            return Err(format!("port {bit}: fidelity {f}"));
        }
    }
    Ok(())
}

fn teleport_branches(_: &RunConfig) -> Result<(), String> {
    let amps = vec![
        C64::new(0.5, 0.1),
        C64::new(-0.3, 0.4),
        C64::new(0.2, -0.6),
        C64::new(0.1, 0.25),
    ];
    let mut address = StateVector::from_amplitudes(amps).map_err(core)?;
    address.normalize().map_err(core)?;
    let target = expected_tree_state(&address).map_err(core)?;
    for b in 0..16 {
        let r =
            teleport_addresses(&address, &mut ForcedOutcomes::from_index(b, 4)).map_err(core)?;
        let f = r
            .state
            .extract(&r.tree_qubits())
            .and_then(|s| s.overlap_fidelity(&target))
            .map_err(core)?;
        if (f - 1.0).abs() > 1e-10 {
            return Err(format!("branch {b:04b}: fidelity {f}"));
        }
    }
    Ok(())
}

fn query_target(_: &RunConfig) -> Result<(), String> {
    let amps = vec![
        C64::new(0.3, 0.2),
        C64::new(0.5, -0.1),
        C64::new(-0.4, 0.3),
        C64::new(0.2, 0.55),
    ];
    let mut address = StateVector::from_amplitudes(amps).map_err(core)?;
    address.normalize().map_err(core)?;
    for data_bits in 0..16u8 {
        let data: Vec<u8> = (0..4).map(|j| (data_bits >> j) & 1).collect();
        let want = expected_query_state(&address, &data).map_err(core)?;
        for herald in 0..4 {
            let out = full_query_sim(
                &address,
                &data,
                &ReflectionTriple::ideal(),
                &mut ForcedOutcomes::from_index(herald, 2),
            )
            .map_err(core)?;
            let mut keep = out.layout.address.clone();
            keep.push(out.layout.bus);
            let f = out
                .state
                .extract(&keep)
                .and_then(|s| s.overlap_fidelity(&want))
                .map_err(core)?;
            if (f - 1.0).abs() > 1e-10 {
                return Err(format!("data {data:?}, heralds {herald:02b}: fidelity {f}"));
            }
        }
    }
    Ok(())
}

fn random_chain(r: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let times = (0..n).map(|_| r.random::<f64>() * 1e-6).collect();
    let probs = (0..n).map(|_| 0.05 + 0.95 * r.random::<f64>()).collect();
    (times, probs, r.random::<f64>() * 1e-5)
}

fn closed_vs_recursion(_: &RunConfig) -> Result<(), String> {
    let mut r = rng();
    for trial in 0..1000 {
        let n = 1 + trial % 6;
        let (t, p, tau) = random_chain(&mut r, n);
        let a = expected_time(&t, &p, tau).map_err(core)?;
        let b = expected_time_recursion(&t, &p, tau).map_err(core)?;
        if (a - b).abs() > 1e-9 * a.abs() {
            return Err(format!("t={t:?} p={p:?} tau={tau}: {a} vs {b}"));
        }
    }
    Ok(())
}

fn ld_dominance(_: &RunConfig) -> Result<(), String> {
    let mut r = rng();
    for trial in 0..10_000 {
        let (t, p, tau) = random_chain(&mut r, 1 + trial % 8);
        let ld = expected_time(&t, &p, tau).map_err(core)?;
        let no = expected_time_no_loss_detection(&t, &p, tau).map_err(core)?;
        if ld > no * (1.0 + 1e-12) {
            return Err(format!("t={t:?} p={p:?} tau={tau}: {ld} > {no}"));
        }
    }
    Ok(())
}

fn retry_mc(trials: u64, sigmas: f64) -> Result<(), String> {
    let mut r = rng();
    for n in 1..=3 {
        let (t, p, tau) = random_chain(&mut r, n);
        let want = expected_time(&t, &p, tau).map_err(core)?;
        let est = simulate_retry_process(&t, &p, tau, trials, 17 + n as u64).map_err(core)?;
        if est.sigmas_from(want) > sigmas {
            return Err(format!(
                "n={n}: mean {} +- {} vs {want}",
                est.mean, est.std_error
            ));
        }
    }
    Ok(())
}

fn retry_mc_small(_: &RunConfig) -> Result<(), String> {
    retry_mc(10_000, 4.0)
}

fn retry_mc_full(_: &RunConfig) -> Result<(), String> {
    retry_mc(1_000_000, 3.0)
}

fn certain_cfg(depth: usize) -> TeleportConfig {
    TeleportConfig {
        depth,
        p_ep: 1.0,
        reset_time: 5e-6,
        swap_to_nuclear_time: 16e-6,
        swap_to_broker_time: 30e-9,
        attempt_time: 200e-9,
        query_probabilities: vec![1.0; depth],
        retrieval_probability: 1.0,
        retrieval_time: 1e-9,
    }
}

fn critical_path(_: &RunConfig) -> Result<(), String> {
    for depth in 1..=8 {
        let cfg = certain_cfg(depth);
        let sim = mean_query_duration(&cfg, 64, 1).map_err(core)?.mean;
        let geo = geometric_mean_duration(&cfg).map_err(core)?;
        if (sim - geo).abs() > 1e-12 * geo {
            return Err(format!("depth {depth}: {sim} vs {geo}"));
        }
    }
    Ok(())
}

fn within_sigmas(samples: &[f64], want: f64, sigmas: f64) -> Result<(), String> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    if (mean - want).abs() > sigmas * se {
        return Err(format!("mean {mean} +- {se} vs {want}"));
    }
    Ok(())
}

const GEOMETRIC_SAMPLES: usize = 100_000;

fn geometric_attempts(_: &RunConfig) -> Result<(), String> {
    for (i, p) in [0.05, 0.3, 0.8].into_iter().enumerate() {
        let mut r = ChaCha8Rng::seed_from_u64(i as u64);
        let xs: Vec<f64> = (0..GEOMETRIC_SAMPLES)
            .map(|_| sample_attempts(p, &mut r) as f64)
            .collect();
        within_sigmas(&xs, 1.0 / p, 3.0).map_err(|e| format!("p={p}: {e}"))?;
    }
    Ok(())
}

fn ghz_pair_duration(_: &RunConfig) -> Result<(), String> {
    for (i, p) in [0.1, 0.5].into_iter().enumerate() {
        let cfg = TeleportConfig {
            p_ep: p,
            ..certain_cfg(3)
        };
        let mut r = ChaCha8Rng::seed_from_u64(10 + i as u64);
        let xs = (0..GEOMETRIC_SAMPLES)
            .map(|_| simulate_ghz_layer(2, &cfg, &mut r))
            .collect::<qram_core::Result<Vec<f64>>>()
            .map_err(core)?;
        let per_failure = cfg.attempt_time + cfg.reset_time;
        let want = (1.0 / p - 1.0) * per_failure + cfg.attempt_time + cfg.swap_to_nuclear_time;
        within_sigmas(&xs, want, 3.0).map_err(|e| format!("p_ep={p}: {e}"))?;
    }
    Ok(())
}

fn retrieval_attempts(_: &RunConfig) -> Result<(), String> {
    let p = 0.2;
    let cfg = TeleportConfig {
        retrieval_probability: p,
        retrieval_time: 1e-6,
        ..certain_cfg(3)
    };
    let mut r = ChaCha8Rng::seed_from_u64(20);
    let per_try = cfg.retrieval_time + cfg.reset_time;
    let xs: Vec<f64> = (0..GEOMETRIC_SAMPLES)
        .map(|_| ((simulate_timeline(&cfg, &mut r).retrieval + cfg.reset_time) / per_try).round())
        .collect();
    within_sigmas(&xs, 1.0 / p, 3.0)
}

fn fidelity_models(cfg: &RunConfig) -> Result<(), String> {
    let t = cfg.timing().swap_to_nuclear_time;
    let m = CoherenceModel::calibrated(1.0, 1e-2, t).map_err(core)?;
    let f = decoherence_fidelity(1000.0, &m, t).map_err(core)?;
    if (f - 0.5).abs() > 0.1 {
        return Err(format!("anchor fidelity {f}"));
    }
    let e = 1.0 - physical_error_fidelity(10, 1e-4, ErrorScaling::AllActive).map_err(core)?;
    if (e - 0.0974).abs() > 5e-4 {
        return Err(format!("all-active infidelity {e}"));
    }
    Ok(())
}

fn config_round_trip(cfg: &RunConfig) -> Result<(), String> {
    let back = RunConfig::from_toml(&cfg.to_toml()).map_err(|e| e.to_string())?;
    if back.hash() != cfg.hash() {
        return Err("hash changed after reload".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let mut lines = Vec::new();
        let n = run(Suite::Fast, &RunConfig::default(), |l| {
            lines.push(l.to_string())
        })
        .unwrap();
        assert_eq!(n, lines.len());
        assert!(lines.iter().all(|l| l.starts_with("PASS")));
    }
}
