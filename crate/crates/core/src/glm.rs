//! Efficiency of the sequential setting scheme: per-layer herald
//! probabilities, expected query time with and without loss detection, and
//! rate curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{reflection_coefficients, CavityParams, FieldDeviation, ReflectionTriple};
use crate::error::{arg, Error, Result};
use crate::filter::SPEED_OF_LIGHT;
use crate::protocols::{optimized_triple, SignConvention};
use crate::sweep::SweepResult;

/// Per-layer round-trip path lengths and timing of a depth-`n` tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub depth: usize,
    /// Round-trip length in the photonic chip for each layer (m).
    pub pic_segment_lengths: Vec<f64>,
    /// Round-trip length in diamond waveguide for each layer (m).
    pub dmd_segment_lengths: Vec<f64>,
    /// Round-trip length of bent waveguide for each layer (m).
    pub bend_segment_lengths: Vec<f64>,
    pub group_velocity_pic: f64,
    pub group_velocity_dmd: f64,
    pub reset_time: f64,
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return arg("tree depth must be at least 1");
        }
        for (name, v) in [
            ("pic", &self.pic_segment_lengths),
            ("dmd", &self.dmd_segment_lengths),
            ("bend", &self.bend_segment_lengths),
        ] {
            if v.len() != self.depth {
                return arg(format!(
                    "{name} lengths: expected {} entries, got {}",
                    self.depth,
                    v.len()
                ));
            }
            if v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                return arg(format!("{name} lengths must be finite and non-negative"));
            }
        }
        if !(self.group_velocity_pic > 0.0 && self.group_velocity_dmd > 0.0) {
            return arg("group velocities must be positive");
        }
        if !(self.reset_time.is_finite() && self.reset_time >= 0.0) {
            return arg("reset time must be non-negative");
        }
        Ok(())
    }

    fn check_layer(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.depth {
            return arg(format!("layer {i} outside 1..={}", self.depth));
        }
        Ok(())
    }
}

/// Generates [`TreeConfig`]s of any depth from per-layer spacings.
///
/// Layer `i` sits `i * pic_spacing` of chip waveguide and
/// `i * bends_per_layer` bends from the root, and every node adds a fixed
/// `dmd_length` of diamond waveguide. All lengths are doubled for the round
/// trip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeLayout {
    pub pic_spacing: f64,
    pub dmd_length: f64,
    pub bends_per_layer: f64,
    pub bend_length: f64,
    pub group_index_pic: f64,
    pub group_index_dmd: f64,
    pub reset_time: f64,
}

impl Default for TreeLayout {
    fn default() -> Self {
        Self {
            pic_spacing: 500e-6,
            dmd_length: 10e-6,
            bends_per_layer: 2.0,
            bend_length: 10e-6,
            group_index_pic: 2.3862,
            group_index_dmd: 2.4513,
            reset_time: 5e-6,
        }
    }
}

impl TreeLayout {
    pub fn tree(&self, depth: usize) -> Result<TreeConfig> {
        let layers = 1..=depth;
        let cfg = TreeConfig {
            depth,
            pic_segment_lengths: layers
                .clone()
                .map(|i| 2.0 * i as f64 * self.pic_spacing)
                .collect(),
            dmd_segment_lengths: layers.clone().map(|_| 2.0 * self.dmd_length).collect(),
            bend_segment_lengths: layers
                .map(|i| 2.0 * i as f64 * self.bends_per_layer * self.bend_length)
                .collect(),
            group_velocity_pic: SPEED_OF_LIGHT / self.group_index_pic,
            group_velocity_dmd: SPEED_OF_LIGHT / self.group_index_dmd,
            reset_time: self.reset_time,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// dB figure to a natural-log attenuation coefficient.
pub fn db_to_neper(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 10.0
}

/// dB loss to a linear transmission.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Straight-waveguide loss (dB/m).
    pub propagation_loss_straight: f64,
    /// Bent-waveguide loss (dB/m).
    pub propagation_loss_bend: f64,
    /// Optional per-layer straight loss (dB/m) overriding the uniform value.
    #[serde(default)]
    pub per_layer_straight: Option<Vec<f64>>,
    pub detection_efficiency: f64,
    /// Path term of the Bell-attempt probability; `None` uses the layer-1
    /// propagation efficiency.
    #[serde(default)]
    pub path_efficiency: Option<f64>,
    pub r_cav: f64,
    pub r_m: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        Self {
            propagation_loss_straight: 2.7,
            propagation_loss_bend: 9.3,
            per_layer_straight: None,
            detection_efficiency: db_to_linear(1.3),
            path_efficiency: None,
            r_cav: 1.0,
            r_m: 1.0,
        }
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(unit(self.detection_efficiency) && unit(self.r_cav) && unit(self.r_m)) {
            return arg("detection efficiency and reflectances must lie in [0, 1]");
        }
        if self.path_efficiency.is_some_and(|p| !unit(p)) {
            return arg("path efficiency must lie in [0, 1]");
        }
        let losses = [self.propagation_loss_straight, self.propagation_loss_bend];
        if losses
            .iter()
            .chain(self.per_layer_straight.iter().flatten())
            .any(|l| !(l.is_finite() && *l >= 0.0))
        {
            return arg("propagation losses must be finite and non-negative");
        }
        Ok(())
    }

    /// Same losses with reflectances taken from a reflection triple.
    pub fn with_triple(&self, t: &ReflectionTriple) -> Self {
        let (r_cav, r_m) = reflection_coefficients(t);
        Self {
            r_cav: r_cav.min(1.0),
            r_m: r_m.min(1.0),
            ..self.clone()
        }
    }

    /// Setting efficiency `eta_det (R_m + R_cav) / 2`.
    pub fn setting_efficiency(&self) -> f64 {
        self.detection_efficiency * (self.r_m + self.r_cav) / 2.0
    }

    pub fn routing_efficiency(&self) -> f64 {
        self.r_cav
    }

    fn straight_db(&self, i: usize) -> f64 {
        match &self.per_layer_straight {
            Some(v) => v
                .get(i - 1)
                .copied()
                .unwrap_or(self.propagation_loss_straight),
            None => self.propagation_loss_straight,
        }
    }

    pub fn path_efficiency_for(&self, cfg: &TreeConfig) -> Result<f64> {
        match self.path_efficiency {
            Some(p) => Ok(p),
            None => propagation_efficiency(1, cfg, self),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateResult {
    pub per_layer_p: Vec<f64>,
    pub p_succ: f64,
    pub expected_time: f64,
    pub rate: f64,
    pub rate_no_ld: f64,
}

/// Round-trip survival `exp(-eta_p L(i))` of the register photon for layer `i`.
pub fn propagation_efficiency(i: usize, cfg: &TreeConfig, loss: &LossModel) -> Result<f64> {
    cfg.check_layer(i)?;
    let straight = cfg.pic_segment_lengths[i - 1] + cfg.dmd_segment_lengths[i - 1];
    let exponent = db_to_neper(loss.straight_db(i)) * straight
        + db_to_neper(loss.propagation_loss_bend) * cfg.bend_segment_lengths[i - 1];
    Ok((-exponent).exp())
}

/// `p_i = exp(-eta_p L(i)) eta_r^(i-1) eta_s`.
pub fn layer_probability(i: usize, cfg: &TreeConfig, loss: &LossModel) -> Result<f64> {
    let prop = propagation_efficiency(i, cfg, loss)?;
    Ok(prop * loss.routing_efficiency().powi(i as i32 - 1) * loss.setting_efficiency())
}

pub fn layer_probabilities(cfg: &TreeConfig, loss: &LossModel) -> Result<Vec<f64>> {
    cfg.validate()?;
    loss.validate()?;
    (1..=cfg.depth)
        .map(|i| layer_probability(i, cfg, loss))
        .collect()
}

pub fn success_probability(cfg: &TreeConfig, loss: &LossModel) -> Result<f64> {
    Ok(layer_probabilities(cfg, loss)?.iter().product())
}

/// `exp(-sum eta_p L(i)) eta_r^(n(n-1)/2) eta_s^n`.
pub fn success_probability_closed_form(cfg: &TreeConfig, loss: &LossModel) -> Result<f64> {
    cfg.validate()?;
    loss.validate()?;
    let n = cfg.depth;
    let mut log_prop = 0.0;
    for i in 1..=n {
        log_prop += propagation_efficiency(i, cfg, loss)?.ln();
    }
    Ok(log_prop.exp()
        * loss.routing_efficiency().powi((n * (n - 1) / 2) as i32)
        * loss.setting_efficiency().powi(n as i32))
}

/// Round-trip travel time to layer `i`.
pub fn travel_time(i: usize, cfg: &TreeConfig) -> Result<f64> {
    cfg.check_layer(i)?;
    Ok(cfg.pic_segment_lengths[i - 1] / cfg.group_velocity_pic
        + cfg.dmd_segment_lengths[i - 1] / cfg.group_velocity_dmd)
}

pub fn travel_times(cfg: &TreeConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    (1..=cfg.depth).map(|i| travel_time(i, cfg)).collect()
}

fn check_retry_inputs(times: &[f64], probs: &[f64], reset: f64) -> Result<()> {
    if times.is_empty() || times.len() != probs.len() {
        return arg("need one travel time per layer probability");
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p))
        || times.iter().any(|t| !(*t >= 0.0))
        || !(reset >= 0.0)
    {
        return arg("probabilities must lie in [0, 1] and times must be non-negative");
    }
    if probs.contains(&0.0) {
        return Err(Error::Divergence(
            "a layer never heralds; expected query time is infinite".into(),
        ));
    }
    Ok(())
}

/// `sum_i t_i / prod_{j>=i} p_j + tau / prod_j p_j - tau`.
pub fn expected_time(times: &[f64], probs: &[f64], reset: f64) -> Result<f64> {
    check_retry_inputs(times, probs, reset)?;
    let mut tail = 1.0;
    let mut total = 0.0;
    for (t, p) in times.iter().zip(probs).rev() {
        tail *= p;
        total += t / tail;
    }
    Ok(total + reset / tail - reset)
}

/// Solves the restart balance equation directly: with `q_k` the chance that
/// layer `k` is the first to fail and `S_k` the time spent up to it,
/// `T = P sum t + sum_k q_k (T + S_k + tau)`.
pub fn expected_time_recursion(times: &[f64], probs: &[f64], reset: f64) -> Result<f64> {
    check_retry_inputs(times, probs, reset)?;
    let mut reach = 1.0;
    let mut elapsed = 0.0;
    let mut fail_mass = 0.0;
    let mut fail_cost = 0.0;
    for (t, p) in times.iter().zip(probs) {
        elapsed += t;
        let q = reach * (1.0 - p);
        fail_mass += q;
        fail_cost += q * (elapsed + reset);
        reach *= p;
    }
    Ok((reach * elapsed + fail_cost) / (1.0 - fail_mass))
}

/// Without loss detection every attempt runs to the end:
/// `(sum t + tau) / prod p - tau`.
pub fn expected_time_no_loss_detection(times: &[f64], probs: &[f64], reset: f64) -> Result<f64> {
    check_retry_inputs(times, probs, reset)?;
    let p: f64 = probs.iter().product();
    Ok((times.iter().sum::<f64>() + reset) / p - reset)
}

pub fn expected_query_time(cfg: &TreeConfig, loss: &LossModel) -> Result<f64> {
    expected_time(
        &travel_times(cfg)?,
        &layer_probabilities(cfg, loss)?,
        cfg.reset_time,
    )
}

pub fn query_rate(cfg: &TreeConfig, loss: &LossModel) -> Result<f64> {
    reciprocal(expected_query_time(cfg, loss)?)
}

pub fn query_rate_no_loss_detection(cfg: &TreeConfig, loss: &LossModel) -> Result<f64> {
    let t = expected_time_no_loss_detection(
        &travel_times(cfg)?,
        &layer_probabilities(cfg, loss)?,
        cfg.reset_time,
    )?;
    reciprocal(t)
}

fn reciprocal(t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Divergence(format!(
            "expected query time {t} has no finite positive rate"
        )));
    }
    Ok(1.0 / t)
}

pub fn evaluate(cfg: &TreeConfig, loss: &LossModel) -> Result<RateResult> {
    let times = travel_times(cfg)?;
    let per_layer_p = layer_probabilities(cfg, loss)?;
    let expected_time = expected_time(&times, &per_layer_p, cfg.reset_time)?;
    let rate_no_ld = reciprocal(expected_time_no_loss_detection(
        &times,
        &per_layer_p,
        cfg.reset_time,
    )?)?;
    Ok(RateResult {
        p_succ: per_layer_p.iter().product(),
        per_layer_p,
        expected_time,
        rate: reciprocal(expected_time)?,
        rate_no_ld,
    })
}

/// Cavity constants shared by every point of a coupling sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityBase {
    pub gamma: f64,
    pub kappa: f64,
    pub omega_c: f64,
}

impl CavityBase {
    pub fn params(&self, cooperativity: f64, coupling: f64) -> Result<CavityParams> {
        CavityParams::from_cooperativity(
            cooperativity,
            self.gamma,
            self.kappa,
            coupling * self.kappa,
            self.omega_c,
        )
    }
}

/// Mirror-optimized triple, its six-state fidelity, and the loss model it
/// implies, for one `(C, kappa_wg/kappa)` point.
pub fn operating_point(
    base: &CavityBase,
    cooperativity: f64,
    coupling: f64,
    dev: FieldDeviation,
    loss: &LossModel,
) -> Result<(ReflectionTriple, f64, LossModel)> {
    let params = base.params(cooperativity, coupling)?;
    let convention = SignConvention::default();
    let (triple, fidelity) = optimized_triple(&params, dev, convention)?;
    Ok((triple, fidelity.mean, loss.with_triple(&triple)))
}

/// Rate and fidelity versus depth and coupling at fixed cooperativity.
///
/// Columns: `n, N_memories, kappa_wg_over_kappa, C, rate_hz, rate_no_ld_hz,
/// fidelity`. Fidelity is the single-transfer six-state mean.
pub fn rate_curve(
    depths: &[usize],
    couplings: &[f64],
    cooperativity: f64,
    base: &CavityBase,
    layout: &TreeLayout,
    loss: &LossModel,
) -> Result<SweepResult> {
    let mut out = SweepResult::new(
        "glm_rate",
        &[
            "n",
            "N_memories",
            "kappa_wg_over_kappa",
            "C",
            "rate_hz",
            "rate_no_ld_hz",
            "fidelity",
        ],
    );
    let points: Vec<_> = couplings
        .par_iter()
        .map(|&k| operating_point(base, cooperativity, k, FieldDeviation::ZERO, loss))
        .collect::<Result<_>>()?;
    for (&k, (_, fidelity, lm)) in couplings.iter().zip(&points) {
        for &n in depths {
            let r = evaluate(&layout.tree(n)?, lm)?;
            out.push(vec![
                n as f64,
                (1u64 << n) as f64,
                k,
                cooperativity,
                r.rate,
                r.rate_no_ld,
                *fidelity,
            ])?;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    pub(crate) fn from_sums(sum: f64, sum_sq: f64, trials: u64) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
            trials,
        }
    }

    /// `|mean - x|` in standard errors.
    pub fn sigmas_from(&self, x: f64) -> f64 {
        if self.std_error == 0.0 {
            return if self.mean == x { 0.0 } else { f64::INFINITY };
        }
        (self.mean - x).abs() / self.std_error
    }
}

pub(crate) const CHUNK: u64 = 8192;

/// Runs `trials` independent samples in chunks of `chunk`, chunk `c` drawing
/// from stream `c` of a ChaCha generator seeded with `seed`, so results do not
/// depend on the thread count.
pub(crate) fn chunked_samples<F>(
    trials: u64,
    seed: u64,
    chunk: u64,
    sample: F,
) -> Result<MonteCarloEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if trials == 0 {
        return arg("need at least one trial");
    }
    let chunks = trials.div_ceil(chunk);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = chunk.min(trials - c * chunk);
            let mut acc = (0.0, 0.0);
            for _ in 0..n {
                let x = sample(&mut rng);
                acc.0 += x;
                acc.1 += x * x;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MonteCarloEstimate::from_sums(sum, sum_sq, trials))
}

/// One query under loss detection: layers are heralded in order, a missing
/// herald costs the time spent so far plus a reset and restarts from layer 1.
pub fn sample_retry_process<R: Rng>(times: &[f64], probs: &[f64], reset: f64, rng: &mut R) -> f64 {
    let mut elapsed = 0.0;
    'attempt: loop {
        for (t, p) in times.iter().zip(probs) {
            elapsed += t;
            if rng.random::<f64>() >= *p {
                elapsed += reset;
                continue 'attempt;
            }
        }
        return elapsed;
    }
}

pub fn simulate_retry_process(
    times: &[f64],
    probs: &[f64],
    reset: f64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_retry_inputs(times, probs, reset)?;
    chunked_samples(trials, seed, CHUNK, |rng| {
        sample_retry_process(times, probs, reset, rng)
    })
}
