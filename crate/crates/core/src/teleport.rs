//! Event-based timing of the teleportation scheme, its geometric-mean
//! analytic rate and power-law fit, and query-fidelity models.
//!
//! One query runs four steps:
//! 1. GHZ creation across the largest layer (all nodes but the leftmost) by
//!    pairwise heralded links in two rounds, each success followed by a
//!    broker-to-memory swap;
//! 2. concurrently, one heralded link per layer between the processor and the
//!    leftmost node, again stored in memory;
//! 3. after both, the leftmost nodes join their GHZ groups through one more
//!    heralded link, the memories are swapped back to the brokers and the bus
//!    photon is retrieved, restarting with a reset whenever it is lost;
//! 4. a fresh processor link per layer and a memory readback for the final
//!    local Bell measurements.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::FieldDeviation;
use crate::error::{arg, Error, Result};
use crate::glm::{
    self, chunked_samples, layer_probabilities, operating_point, propagation_efficiency,
    travel_time, CavityBase, LossModel, MonteCarloEstimate, TreeLayout,
};
use crate::sweep::SweepResult;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportTiming {
    pub reset_time: f64,
    pub swap_to_nuclear_time: f64,
    pub swap_to_broker_time: f64,
    pub attempt_time: f64,
}

impl Default for TeleportTiming {
    fn default() -> Self {
        Self {
            reset_time: 5e-6,
            swap_to_nuclear_time: 16e-6,
            swap_to_broker_time: 30e-9,
            attempt_time: 200e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportConfig {
    pub depth: usize,
    /// Success probability of one heralded Bell attempt.
    pub p_ep: f64,
    pub reset_time: f64,
    pub swap_to_nuclear_time: f64,
    pub swap_to_broker_time: f64,
    pub attempt_time: f64,
    /// Sequential-scheme layer probabilities, kept for comparison.
    pub query_probabilities: Vec<f64>,
    /// Chance the bus photon survives the trip to the memory layer and back.
    pub retrieval_probability: f64,
    pub retrieval_time: f64,
}

impl TeleportConfig {
    /// Builds the configuration from the sequential-scheme loss model:
    /// `p_ep = eta_path eta_s^2 eta_det` and retrieval success
    /// `exp(-eta_p L(n)) eta_r^n eta_det`.
    pub fn from_loss(
        depth: usize,
        layout: &TreeLayout,
        loss: &LossModel,
        timing: TeleportTiming,
    ) -> Result<Self> {
        let tree = layout.tree(depth)?;
        let eta_s = loss.setting_efficiency();
        let p_ep = loss.path_efficiency_for(&tree)? * eta_s * eta_s * loss.detection_efficiency;
        let retrieval_probability = propagation_efficiency(depth, &tree, loss)?
            * loss.routing_efficiency().powi(depth as i32)
            * loss.detection_efficiency;
        let cfg = Self {
            depth,
            p_ep,
            reset_time: timing.reset_time,
            swap_to_nuclear_time: timing.swap_to_nuclear_time,
            swap_to_broker_time: timing.swap_to_broker_time,
            attempt_time: timing.attempt_time,
            query_probabilities: layer_probabilities(&tree, loss)?,
            retrieval_probability,
            retrieval_time: travel_time(depth, &tree)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return arg("depth must be at least 1");
        }
        let times = [
            self.reset_time,
            self.swap_to_nuclear_time,
            self.swap_to_broker_time,
            self.attempt_time,
            self.retrieval_time,
        ];
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return arg("all times must be finite and non-negative");
        }
        for p in [self.p_ep, self.retrieval_probability] {
            if !(0.0..=1.0).contains(&p) {
                return arg(format!("probability {p} outside [0, 1]"));
            }
        }
        if self.p_ep == 0.0 {
            return Err(Error::Divergence("Bell attempts never succeed".into()));
        }
        if self.retrieval_probability == 0.0 {
            return Err(Error::Divergence("bus photon is never retrieved".into()));
        }
        Ok(())
    }

    /// Nodes in the GHZ part of the largest layer.
    pub fn ghz_nodes(&self) -> usize {
        (1usize << (self.depth - 1)) - 1
    }

    fn link_cost(&self, attempts: u64) -> f64 {
        (attempts - 1) as f64 * (self.attempt_time + self.reset_time) + self.attempt_time
    }

    fn mean_link(&self) -> f64 {
        self.link_cost(1) + (1.0 / self.p_ep - 1.0) * (self.attempt_time + self.reset_time)
    }
}

/// Attempts until the first success, `p` in (0, 1].
pub fn sample_attempts<R: Rng>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let u = 1.0 - rng.random::<f64>();
    1 + (u.ln() / (1.0 - p).ln()).floor() as u64
}

fn ghz_rounds<R: Rng>(num_nodes: usize, cfg: &TeleportConfig, rng: &mut R) -> f64 {
    let pair =
        |rng: &mut R| cfg.link_cost(sample_attempts(cfg.p_ep, rng)) + cfg.swap_to_nuclear_time;
    let round = |start: usize, rng: &mut R| {
        (start..num_nodes.saturating_sub(1))
            .step_by(2)
            .map(|_| pair(rng))
            .fold(0.0, f64::max)
    };
    let first = round(0, rng);
    first + round(1, rng)
}

/// Duration of one GHZ creation over `num_nodes` neighbours: pairs
/// `(1,2), (3,4), ...` first, then the bridging pairs `(2,3), (4,5), ...`.
pub fn simulate_ghz_layer<R: Rng>(
    num_nodes: usize,
    cfg: &TeleportConfig,
    rng: &mut R,
) -> Result<f64> {
    if num_nodes < 2 {
        return arg("a GHZ layer needs at least two nodes");
    }
    cfg.validate()?;
    Ok(ghz_rounds(num_nodes, cfg, rng))
}

fn processor_links<R: Rng>(cfg: &TeleportConfig, rng: &mut R) -> f64 {
    (0..cfg.depth)
        .map(|_| cfg.link_cost(sample_attempts(cfg.p_ep, rng)) + cfg.swap_to_nuclear_time)
        .fold(0.0, f64::max)
}

/// Per-step durations of one simulated query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct QueryTimeline {
    pub ghz: f64,
    pub processor_links: f64,
    pub join: f64,
    pub retrieval: f64,
    pub return_links: f64,
}

impl QueryTimeline {
    pub fn total(&self) -> f64 {
        self.ghz.max(self.processor_links) + self.join + self.retrieval + self.return_links
    }
}

pub fn simulate_timeline<R: Rng>(cfg: &TeleportConfig, rng: &mut R) -> QueryTimeline {
    let ghz = ghz_rounds(cfg.ghz_nodes(), cfg, rng);
    let processor = processor_links(cfg, rng);
    // layers 2..=n have a GHZ group to join
    let join = (1..cfg.depth)
        .map(|_| cfg.link_cost(sample_attempts(cfg.p_ep, rng)))
        .fold(0.0, f64::max)
        + cfg.swap_to_broker_time;
    let tries = sample_attempts(cfg.retrieval_probability, rng);
    let retrieval = tries as f64 * cfg.retrieval_time + (tries - 1) as f64 * cfg.reset_time;
    let return_links = processor_links(cfg, rng) + cfg.swap_to_broker_time;
    QueryTimeline {
        ghz,
        processor_links: processor,
        join,
        retrieval,
        return_links,
    }
}

pub fn simulate_query<R: Rng>(cfg: &TeleportConfig, rng: &mut R) -> Result<f64> {
    cfg.validate()?;
    Ok(simulate_timeline(cfg, rng).total())
}

const TRIAL_CHUNK: u64 = 64;

/// Mean query duration over `trials` seeded samples.
pub fn mean_query_duration(
    cfg: &TeleportConfig,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    cfg.validate()?;
    chunked_samples(trials, seed, TRIAL_CHUNK, |rng| {
        simulate_timeline(cfg, rng).total()
    })
}

/// The same timeline with every heralded stage replaced by its mean: one pair
/// stands in for a round and one link for a set of parallel links.
pub fn geometric_mean_duration(cfg: &TeleportConfig) -> Result<f64> {
    cfg.validate()?;
    let pair = cfg.mean_link() + cfg.swap_to_nuclear_time;
    let ghz = match cfg.ghz_nodes() {
        0 | 1 => 0.0,
        2 => pair,
        _ => 2.0 * pair,
    };
    let join = if cfg.depth > 1 { cfg.mean_link() } else { 0.0 } + cfg.swap_to_broker_time;
    let p = cfg.retrieval_probability;
    let retrieval = cfg.retrieval_time / p + (1.0 / p - 1.0) * cfg.reset_time;
    Ok(ghz.max(pair) + join + retrieval + pair + cfg.swap_to_broker_time)
}

/// `f(x) = a x^(-b)`, applied to the geometric-mean rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub a: f64,
    pub b: f64,
}

impl Default for FitModel {
    fn default() -> Self {
        Self {
            a: 1.7094,
            b: 0.79386,
        }
    }
}

impl FitModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b.is_finite()) {
            return arg("fit needs a > 0 and finite b");
        }
        Ok(Self { a, b })
    }

    pub fn factor(&self, x: f64) -> f64 {
        self.a * x.powf(-self.b)
    }

    /// Least squares of `ln y = ln a - b ln x`.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return arg("fit needs at least two paired points");
        }
        if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
            return arg("fit needs positive data");
        }
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return arg("fit needs at least two distinct abscissae");
        }
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        Self::new((my - slope * mx).exp(), -slope)
    }
}

/// Shared inputs of a rate comparison between the two schemes.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeContext {
    pub cooperativity: f64,
    pub base: CavityBase,
    pub layout: TreeLayout,
    pub loss: LossModel,
    pub timing: TeleportTiming,
    pub fit: FitModel,
    pub coherence: CoherenceModel,
}

/// Seed of grid point `index`, decorrelated from its neighbours.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Simulated, fitted and sequential-scheme rates versus depth and coupling.
///
/// Columns: `n, N_memories, kappa_wg_over_kappa, rate_sim_hz, rate_sim_se_hz,
/// rate_geo_hz, rate_fit_hz, rate_glm_hz, fq_decoherence`. The fit factor is
/// evaluated at the depth `n`.
pub fn teleport_rate_curve(
    depths: &[usize],
    couplings: &[f64],
    trials: u64,
    seed: u64,
    ctx: &SchemeContext,
) -> Result<SweepResult> {
    if trials < 1000 {
        return arg("rate curves need at least 1000 trials per point");
    }
    let mut out = SweepResult::new(
        "teleport_rate",
        &[
            "n",
            "N_memories",
            "kappa_wg_over_kappa",
            "rate_sim_hz",
            "rate_sim_se_hz",
            "rate_geo_hz",
            "rate_fit_hz",
            "rate_glm_hz",
            "fq_decoherence",
        ],
    );
    let points: Vec<_> = couplings
        .par_iter()
        .map(|&k| {
            operating_point(
                &ctx.base,
                ctx.cooperativity,
                k,
                FieldDeviation::ZERO,
                &ctx.loss,
            )
        })
        .collect::<Result<_>>()?;
    for (ki, (&k, (_, _, loss))) in couplings.iter().zip(&points).enumerate() {
        for (ni, &n) in depths.iter().enumerate() {
            let cfg = TeleportConfig::from_loss(n, &ctx.layout, loss, ctx.timing)?;
            let idx = (ki * depths.len() + ni) as u64;
            let est = mean_query_duration(&cfg, trials, point_seed(seed, idx))?;
            let rate = 1.0 / est.mean;
            let geo = 1.0 / geometric_mean_duration(&cfg)?;
            let glm_rate = glm::query_rate(&ctx.layout.tree(n)?, loss)?;
            let memories = (1u64 << n) as f64;
            out.push(vec![
                n as f64,
                memories,
                k,
                rate,
                est.std_error * rate * rate,
                geo,
                ctx.fit.factor(n as f64) * geo,
                glm_rate,
                decoherence_fidelity(memories, &ctx.coherence, ctx.timing.swap_to_nuclear_time)?,
            ])?;
        }
    }
    Ok(out)
}

/// Memory count where `challenger` first overtakes `incumbent`, interpolated
/// on log axes. `None` when no such sign change exists.
pub fn find_crossover(memories: &[f64], incumbent: &[f64], challenger: &[f64]) -> Option<f64> {
    let gap: Vec<f64> = incumbent
        .iter()
        .zip(challenger)
        .map(|(i, c)| (c / i).ln())
        .collect();
    (1..memories.len().min(gap.len())).find_map(|j| {
        let (g0, g1) = (gap[j - 1], gap[j]);
        (g0 < 0.0 && g1 >= 0.0).then(|| {
            let (x0, x1) = (memories[j - 1].ln(), memories[j].ln());
            (x0 + (x1 - x0) * g0 / (g0 - g1)).exp()
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceModel {
    pub t2_nuclear: f64,
    pub t2_electron: f64,
    pub calibration_constant: f64,
}

/// Calibration anchor: fidelity one half at these coherence times, memory
/// count and entangling time.
pub const ANCHOR_T2_NUCLEAR: f64 = 1.0;
pub const ANCHOR_T2_ELECTRON: f64 = 1e-2;
pub const ANCHOR_MEMORIES: f64 = 1000.0;
pub const ANCHOR_FIDELITY: f64 = 0.5;

pub const FIDELITY_FLOOR: f64 = 0.5;

impl CoherenceModel {
    pub fn new(t2_nuclear: f64, t2_electron: f64, calibration_constant: f64) -> Result<Self> {
        if !(t2_nuclear > 0.0 && t2_electron > 0.0) {
            return arg("coherence times must be positive");
        }
        if !(calibration_constant.is_finite() && calibration_constant >= 0.0) {
            return arg("calibration constant must be finite and non-negative");
        }
        Ok(Self {
            t2_nuclear,
            t2_electron,
            calibration_constant,
        })
    }

    /// Constant that puts the anchor point exactly at [`ANCHOR_FIDELITY`].
    pub fn calibrate(entangle_time: f64) -> Result<f64> {
        let exposure = dephasing_exposure(
            ANCHOR_MEMORIES,
            ANCHOR_T2_NUCLEAR,
            ANCHOR_T2_ELECTRON,
            entangle_time,
        );
        if !(exposure > 0.0) {
            return arg("entangling time must be positive");
        }
        Ok(-ANCHOR_FIDELITY.ln() / exposure)
    }

    pub fn calibrated(t2_nuclear: f64, t2_electron: f64, entangle_time: f64) -> Result<Self> {
        Self::new(t2_nuclear, t2_electron, Self::calibrate(entangle_time)?)
    }
}

/// `sum_layers N_i t (1/T2e + 1/T2n)`, with the layer widths summing to the
/// `N - 1` tree nodes.
fn dephasing_exposure(memories: f64, t2n: f64, t2e: f64, t: f64) -> f64 {
    (memories - 1.0).max(0.0) * t * (1.0 / t2e + 1.0 / t2n)
}

/// GHZ-dephasing estimate of the prepared tree's fidelity, floored at the
/// maximally mixed value.
pub fn decoherence_fidelity(
    memories: f64,
    model: &CoherenceModel,
    entangle_time: f64,
) -> Result<f64> {
    if !(memories >= 1.0 && entangle_time >= 0.0) {
        return arg("need at least one memory and a non-negative entangling time");
    }
    let e = dephasing_exposure(memories, model.t2_nuclear, model.t2_electron, entangle_time);
    Ok((-model.calibration_constant * e).exp().max(FIDELITY_FLOOR))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorScaling {
    /// `1 - c eps n^2` with `c` = [`BUCKET_BRIGADE_CONSTANT`]; a placeholder
    /// for the unspecified polylogarithmic scaling.
    BucketBrigade,
    /// `(1 - eps)^(2^n - 1)`: every node is active.
    AllActive,
}

pub const BUCKET_BRIGADE_CONSTANT: f64 = 1.0;

pub fn physical_error_fidelity(depth: usize, epsilon: f64, mode: ErrorScaling) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return arg("error rate must lie in [0, 1]");
    }
    if depth > 62 {
        return arg("depth too large");
    }
    Ok(match mode {
        ErrorScaling::AllActive => (1.0 - epsilon).powf(((1u64 << depth) - 1) as f64),
        ErrorScaling::BucketBrigade => {
            (1.0 - BUCKET_BRIGADE_CONSTANT * epsilon * (depth * depth) as f64).clamp(0.0, 1.0)
        }
    })
}
