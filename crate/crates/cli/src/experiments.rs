//! One pipeline per figure; each produces CSV tables and a short summary.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qram_core::cavity::{fano_sweep, Spin};
use qram_core::filter::{linewidth_sweep, routing_phase_condition, CouplerSetting};
use qram_core::glm::rate_curve;
use qram_core::protocols::{
    bell_create, expected_query_state, expected_tree_state, fidelity_contour, full_query_sim,
    ghz_link, teleport_addresses, ForcedOutcomes, SampledOutcomes, SignConvention,
};
use qram_core::quantum::ghz;
use qram_core::teleport::{
    decoherence_fidelity, find_crossover, physical_error_fidelity, teleport_rate_curve,
    CoherenceModel, ErrorScaling, FitModel, BUCKET_BRIGADE_CONSTANT,
};
use qram_core::{FieldDeviation, ReflectionTriple, StateVector, SweepResult, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Fig3,
    Fig4a,
    Fig4c,
    Fig5,
    FigS1,
    FigS2,
    FigS3,
    FigS6Demo,
    FigS7,
    QueryDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Fig3,
        Experiment::Fig4a,
        Experiment::Fig4c,
        Experiment::Fig5,
        Experiment::FigS1,
        Experiment::FigS2,
        Experiment::FigS3,
        Experiment::FigS6Demo,
        Experiment::FigS7,
        Experiment::QueryDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig3 => "fig3",
            Experiment::Fig4a => "fig4a",
            Experiment::Fig4c => "fig4c",
            Experiment::Fig5 => "fig5",
            Experiment::FigS1 => "figS1",
            Experiment::FigS2 => "figS2",
            Experiment::FigS3 => "figS3",
            Experiment::FigS6Demo => "figS6-demo",
            Experiment::FigS7 => "figS7",
            Experiment::QueryDemo => "query-demo",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let known: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                CliError::Usage(format!(
                    "unknown experiment '{s}' (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddressSpec {
    Uniform,
    Index(usize),
}

impl FromStr for AddressSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(AddressSpec::Uniform);
        }
        s.parse().map(AddressSpec::Index).map_err(|_| {
            CliError::Usage(format!("address must be 'uniform' or an index, got '{s}'"))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOptions {
    pub delta_b: f64,
    pub depth: usize,
    pub address: AddressSpec,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            delta_b: 0.0,
            depth: 2,
            address: AddressSpec::Uniform,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub experiment: Experiment,
    /// `(file stem, table)` pairs.
    pub tables: Vec<(String, SweepResult)>,
    pub sidecar: Option<serde_json::Value>,
    /// Extra `key=value` pairs for the metadata line.
    pub metadata: Vec<(String, String)>,
    pub summary: Vec<String>,
}

impl Outcome {
    fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            tables: Vec::new(),
            sidecar: None,
            metadata: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn table(&self, stem: &str) -> Option<&SweepResult> {
        self.tables.iter().find(|(s, _)| s == stem).map(|(_, t)| t)
    }

    pub fn metadata_line(&self, cfg: &RunConfig) -> String {
        let mut parts = vec![
            format!("experiment={}", self.experiment),
            format!("config_sha256={}", cfg.hash()),
            format!("seed={}", cfg.run.seed),
            format!("trials={}", cfg.run.trials),
        ];
        parts.extend(self.metadata.iter().map(|(k, v)| format!("{k}={v}")));
        parts.join(" ")
    }

    /// Writes every table as `<stem>.csv` (and the sidecar as
    /// `<experiment>.json`) into `dir`, creating it if needed.
    pub fn write(&self, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let meta = self.metadata_line(cfg);
        let mut written = Vec::new();
        for (stem, table) in &self.tables {
            let path = dir.join(format!("{stem}.csv"));
            let mut buf = Vec::new();
            table.write_csv(&mut buf, &meta)?;
            fs::write(&path, buf)?;
            written.push(path);
        }
        if let Some(side) = &self.sidecar {
            let path = dir.join(format!("{}.json", self.experiment));
            let text = serde_json::to_string_pretty(side).map_err(|e| CliError::Io(e.into()))?;
            fs::write(&path, text + "\n")?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run(
    experiment: Experiment,
    cfg: &RunConfig,
    opts: &ExperimentOptions,
) -> Result<Outcome, CliError> {
    let mut out = Outcome::new(experiment);
    match experiment {
        Experiment::Fig3 => fig3(cfg, opts, &mut out)?,
        Experiment::Fig4a => {
            let depths: Vec<usize> = (1..=cfg.grid.fig4a_max_depth).collect();
            glm_curve(cfg, &depths, &cfg.grid.fig4_couplings, "fig4a", &mut out)?
        }
        Experiment::Fig4c => {
            let couplings = cfg.grid.fig4c_coupling.values();
            glm_curve(cfg, &[cfg.grid.fig4c_depth], &couplings, "fig4c", &mut out)?
        }
        Experiment::Fig5 => fig5(cfg, &mut out)?,
        Experiment::FigS1 => fig_s1(cfg, &mut out)?,
        Experiment::FigS2 => fig_s2(cfg, &mut out)?,
        Experiment::FigS3 => fig_s3(cfg, &mut out)?,
        Experiment::FigS6Demo => fig_s6(cfg, opts, &mut out)?,
        Experiment::FigS7 => fig_s7(cfg, &mut out)?,
        Experiment::QueryDemo => query_demo(cfg, opts, &mut out)?,
    }
    Ok(out)
}

fn fig3(cfg: &RunConfig, opts: &ExperimentOptions, out: &mut Outcome) -> Result<(), CliError> {
    let dev = FieldDeviation::new(opts.delta_b)?;
    let base = cfg.cavity_params(cfg.cavity.cooperativity, cfg.cavity.kappa_wg_over_kappa)?;
    let table = fidelity_contour(
        &cfg.grid.fig3_cooperativity.values(),
        &cfg.grid.fig3_coupling.values(),
        dev,
        &base,
        SignConvention::default(),
    )?;
    let f = table.column("fidelity").unwrap_or_default();
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let above = f.iter().filter(|&&x| x > 0.999).count();
    out.summary.push(format!(
        "delta_b={} max fidelity {max:.6}, {above}/{} points above 0.999",
        opts.delta_b,
        f.len()
    ));
    out.metadata
        .push(("delta_b".into(), format!("{}", opts.delta_b)));
    out.tables.push(("fig3".into(), table));
    Ok(())
}

fn glm_curve(
    cfg: &RunConfig,
    depths: &[usize],
    couplings: &[f64],
    stem: &str,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let table = rate_curve(
        depths,
        couplings,
        cfg.cavity.cooperativity,
        &cfg.cavity_base(),
        &cfg.layout(),
        &cfg.loss_model(),
    )?;
    for row in table
        .rows
        .iter()
        .filter(|r| r[0] as usize == *depths.last().unwrap_or(&1))
    {
        out.summary.push(format!(
            "n={} kappa_wg/kappa={:.4}: rate {:.4e} Hz (no LD {:.4e} Hz), fidelity {:.6}",
            row[0], row[2], row[4], row[5], row[6]
        ));
    }
    out.tables.push((stem.into(), table));
    Ok(())
}

fn fig5(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let ctx = cfg.scheme_context()?;
    let depths: Vec<usize> = (1..=cfg.grid.fig5_max_depth).collect();
    let couplings = &cfg.grid.fig4_couplings;
    let table = teleport_rate_curve(&depths, couplings, cfg.run.trials, cfg.run.seed, &ctx)?;
    let mut per_coupling = Vec::new();
    for &k in couplings {
        let rows: Vec<&Vec<f64>> = table.rows.iter().filter(|r| r[2] == k).collect();
        let memories: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let sim: Vec<f64> = rows.iter().map(|r| r[3]).collect();
        let glm: Vec<f64> = rows.iter().map(|r| r[7]).collect();
        let crossover = find_crossover(&memories, &glm, &sim);
        let fit_rows: Vec<&&Vec<f64>> = rows
            .iter()
            .filter(|r| (3.0..=14.0).contains(&r[0]))
            .collect();
        let refit = FitModel::fit(
            &fit_rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
            &fit_rows.iter().map(|r| r[3] / r[5]).collect::<Vec<_>>(),
        )
        .ok();
        out.summary.push(format!(
            "kappa_wg/kappa={k}: crossover N*={} refit b={}",
            crossover.map_or("none".into(), |x| format!("{x:.1}")),
            refit.map_or("n/a".into(), |f| format!("{:.4}", f.b)),
        ));
        per_coupling.push(json!({
            "kappa_wg_over_kappa": k,
            "crossover_memories": crossover,
            "refit": refit.map(|f| json!({"a": f.a, "b": f.b})),
        }));
    }
    let k = ctx.coherence.calibration_constant;
    out.metadata
        .push(("calibration_constant".into(), format!("{k}")));
    out.sidecar = Some(json!({
        "experiment": "fig5",
        "config_sha256": cfg.hash(),
        "seed": cfg.run.seed,
        "trials": cfg.run.trials,
        "calibration_constant": k,
        "fit": {"a": ctx.fit.a, "b": ctx.fit.b, "variable": "depth"},
        "per_coupling": per_coupling,
    }));
    out.tables.push(("fig5".into(), table));
    Ok(())
}

fn fig_s1(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let p = cfg.cavity_params(cfg.cavity.cooperativity, cfg.cavity.kappa_wg_over_kappa)?;
    let grid: Vec<f64> = cfg
        .grid
        .figs1_detuning_over_kappa
        .values()
        .iter()
        .map(|x| p.omega_c + x * p.kappa)
        .collect();
    for spin in [Spin::Down, Spin::Up] {
        let t = fano_sweep(&p, spin, &grid)?;
        out.tables
            .push((format!("figS1_{}", format!("{spin:?}").to_lowercase()), t));
    }
    out.summary.push(format!(
        "splitting {:.6e} rad/s at C={}",
        p.delta, cfg.cavity.cooperativity
    ));
    Ok(())
}

fn phase_grid(points: usize) -> Vec<f64> {
    crate::config::Grid::new(-PI, PI, points).values()
}

fn fig_s2(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let ring = cfg.ring()?;
    let phis = phase_grid(cfg.grid.figs2_phase_points);
    let table = routing_phase_condition(
        &phis,
        &phis,
        &CouplerSetting::balanced(0.0),
        &CouplerSetting::half_wave(0.0, &ring),
        &ring,
    )?;
    if let Some(best) = table.rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])) {
        out.summary.push(format!(
            "max drop power {:.6} at dphi_i={:.4}, dphi_m={:.4}",
            best[2], best[0], best[1]
        ));
    }
    out.tables.push(("figS2".into(), table));
    Ok(())
}

fn fig_s3(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let ring = cfg.ring()?;
    let table = linewidth_sweep(&phase_grid(cfg.grid.figs3_phase_points), &ring)?;
    out.tables.push(("figS3".into(), table));
    Ok(())
}

fn address_state(depth: usize, spec: AddressSpec) -> Result<StateVector, CliError> {
    let dim = 1usize << depth;
    match spec {
        AddressSpec::Uniform => {
            let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
            Ok(StateVector::from_amplitudes(vec![a; dim])?)
        }
        AddressSpec::Index(i) if i < dim => Ok(StateVector::new_basis_state(depth, i)?),
        AddressSpec::Index(i) => Err(CliError::Usage(format!(
            "address {i} out of range for depth {depth}"
        ))),
    }
}

fn fig_s6(cfg: &RunConfig, opts: &ExperimentOptions, out: &mut Outcome) -> Result<(), CliError> {
    let ideal = ReflectionTriple::ideal();
    let bell = bell_create(&ideal, &ideal)?;
    let phi = ghz(2)?;
    for bit in 0..2u8 {
        let h = bell.herald(bit);
        let f = h
            .post_state
            .as_ref()
            .map_or(Ok(0.0), |s| s.overlap_fidelity(&phi))?;
        out.summary.push(format!(
            "bell port w{bit}: probability {:.3}, fidelity {f:.12}",
            h.probability
        ));
    }

    // two Bell pairs |n1 n2>, |n3 n4> and an electron bridge (eL, eR)
    let pair = ghz(2)?;
    let mut s = pair.tensor(&pair)?.tensor(&pair)?;
    let mut draws = SampledOutcomes(ChaCha8Rng::seed_from_u64(cfg.run.seed));
    ghz_link(&mut s, &[0, 1], &[2, 3], (4, 5), &mut draws)?;
    let f = s.extract(&[0, 1, 2, 3])?.overlap_fidelity(&ghz(4)?)?;
    out.summary
        .push(format!("ghz_link 4-qubit fidelity {f:.12}"));

    let depth = 2;
    let address = address_state(depth, opts.address)?;
    let target = expected_tree_state(&address)?;
    let mut table = SweepResult::new(
        "figS6_teleport",
        &[
            "branch",
            "mx1",
            "mz1",
            "mx2",
            "mz2",
            "probability",
            "fidelity",
        ],
    );
    let branches = 1usize << (2 * depth);
    for b in 0..branches {
        let r = teleport_addresses(&address, &mut ForcedOutcomes::from_index(b, 2 * depth))?;
        let p: f64 = r
            .records
            .iter()
            .map(|(x, z)| x.probability * z.probability)
            .product();
        let f = if p > 0.0 {
            r.state
                .extract(&r.tree_qubits())?
                .overlap_fidelity(&target)?
        } else {
            f64::NAN
        };
        let bits: Vec<f64> = r
            .records
            .iter()
            .flat_map(|(x, z)| [x.outcome as f64, z.outcome as f64])
            .collect();
        let mut row = vec![b as f64];
        row.extend(bits);
        row.extend([p, f]);
        table.push(row)?;
    }
    let worst = table
        .column("fidelity")
        .unwrap_or_default()
        .into_iter()
        .filter(|f| !f.is_nan())
        .fold(1.0, f64::min);
    out.summary.push(format!(
        "teleport_addresses: {branches} branches, worst fidelity {worst:.12}"
    ));
    out.tables.push(("figS6_teleport".into(), table));
    Ok(())
}

fn fig_s7(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let model = cfg.coherence_model()?;
    let improved = CoherenceModel::new(
        model.t2_nuclear * 10.0,
        model.t2_electron * 10.0,
        model.calibration_constant,
    )?;
    let t = cfg.timing().swap_to_nuclear_time;
    let eps = cfg.grid.physical_error_rate;
    let mut table = SweepResult::new(
        "figS7",
        &[
            "n",
            "N_memories",
            "fq_decoherence",
            "fq_decoherence_10x",
            "fq_all_active",
            "fq_bucket_brigade_placeholder",
        ],
    );
    for n in 1..=cfg.grid.figs7_max_depth {
        let memories = (1u64 << n) as f64;
        table.push(vec![
            n as f64,
            memories,
            decoherence_fidelity(memories, &model, t)?,
            decoherence_fidelity(memories, &improved, t)?,
            physical_error_fidelity(n, eps, ErrorScaling::AllActive)?,
            physical_error_fidelity(n, eps, ErrorScaling::BucketBrigade)?,
        ])?;
    }
    out.metadata.push((
        "calibration_constant".into(),
        format!("{}", model.calibration_constant),
    ));
    out.metadata.push((
        "bucket_brigade".into(),
        format!("placeholder_1-c*eps*n^2_c={BUCKET_BRIGADE_CONSTANT}"),
    ));
    out.summary.push(format!(
        "N=1000: F_q={:.4} (T2 as configured), {:.4} (10x)",
        decoherence_fidelity(1000.0, &model, t)?,
        decoherence_fidelity(1000.0, &improved, t)?
    ));
    out.tables.push(("figS7".into(), table));
    Ok(())
}

/// Toy database: cell `j` holds the parity of `j`.
pub fn toy_database(depth: usize) -> Vec<u8> {
    (0..1usize << depth)
        .map(|j| (j.count_ones() % 2) as u8)
        .collect()
}

fn query_demo(
    cfg: &RunConfig,
    opts: &ExperimentOptions,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let depth = opts.depth;
    if depth == 0 || depth > qram_core::protocols::query::MAX_QUERY_DEPTH {
        return Err(CliError::Usage(format!(
            "query-demo depth must be 1..={}",
            qram_core::protocols::query::MAX_QUERY_DEPTH
        )));
    }
    let address = address_state(depth, opts.address)?;
    let data = toy_database(depth);
    let mut draws = SampledOutcomes(ChaCha8Rng::seed_from_u64(cfg.run.seed));
    let result = full_query_sim(&address, &data, &ReflectionTriple::ideal(), &mut draws)?;
    let mut keep = result.layout.address.clone();
    keep.push(result.layout.bus);
    let got = result.state.extract(&keep)?;
    let want = expected_query_state(&address, &data)?;
    let mut table = SweepResult::new(
        "query_demo",
        &[
            "address",
            "bus",
            "re",
            "im",
            "probability",
            "target_probability",
        ],
    );
    for (idx, a) in got.amplitudes().iter().enumerate() {
        let target = want.amplitude(idx).norm_sqr();
        if a.norm_sqr() > 1e-15 || target > 1e-15 {
            table.push(vec![
                (idx >> 1) as f64,
                (idx & 1) as f64,
                a.re,
                a.im,
                a.norm_sqr(),
                target,
            ])?;
        }
    }
    let fidelity = got.overlap_fidelity(&want)?;
    out.summary.push(format!("database {:?}", data));
    out.summary.push(format!(
        "{:>7} {:>3} {:>12} {:>12}",
        "address", "bus", "re", "im"
    ));
    for row in &table.rows {
        out.summary.push(format!(
            "{:>7} {:>3} {:>12.8} {:>12.8}",
            row[0], row[1], row[2], row[3]
        ));
    }
    out.summary
        .push(format!("fidelity to target {fidelity:.12}"));
    out.tables.push(("query_demo".into(), table));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!(matches!(
            "fig9".parse::<Experiment>(),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn address_specs() {
        assert_eq!(
            "uniform".parse::<AddressSpec>().unwrap(),
            AddressSpec::Uniform
        );
        assert_eq!("3".parse::<AddressSpec>().unwrap(), AddressSpec::Index(3));
        assert!("x".parse::<AddressSpec>().is_err());
        assert!(address_state(2, AddressSpec::Index(4)).is_err());
    }

    #[test]
    fn query_demo_hits_target() {
        let cfg = RunConfig::default();
        for address in [AddressSpec::Uniform, AddressSpec::Index(2)] {
            let opts = ExperimentOptions {
                depth: 2,
                address,
                ..Default::default()
            };
            let out = run(Experiment::QueryDemo, &cfg, &opts).unwrap();
            assert!(out.summary.last().unwrap().contains("1.000000000000"));
        }
    }
}
