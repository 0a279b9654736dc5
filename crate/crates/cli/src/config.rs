//! Run configuration: TOML with units in the key names, environment
//! overrides, and a content hash for output metadata.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use qram_core::glm::{db_to_linear, CavityBase, LossModel, TreeLayout};
use qram_core::teleport::{CoherenceModel, FitModel, SchemeContext, TeleportTiming};
use qram_core::{CavityParams, RingGeometry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const ENV_PREFIX: &str = "QRAM__";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub kappa_ghz: f64,
    pub gamma_mhz: f64,
    pub omega_c_thz: f64,
    pub cooperativity: f64,
    pub kappa_wg_over_kappa: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            kappa_ghz: 20.34,
            gamma_mhz: 94.0,
            omega_c_thz: 406.774,
            cooperativity: 100.0,
            kappa_wg_over_kappa: 0.97,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSection {
    pub eta_str_db_per_m: f64,
    pub eta_bend_db_per_m: f64,
    pub eta_det_db: f64,
    /// Linear; omitted means the layer-1 propagation efficiency.
    pub eta_path: Option<f64>,
    pub bends_per_layer: f64,
    pub bend_length_um: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            eta_str_db_per_m: 2.7,
            eta_bend_db_per_m: 9.3,
            eta_det_db: 1.3,
            eta_path: None,
            bends_per_layer: 2.0,
            bend_length_um: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub pic_spacing_um: f64,
    pub dmd_length_um: f64,
    pub r_resonator_um: f64,
    pub n_eff: f64,
    pub n_g_pic: f64,
    pub n_g_dmd: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            pic_spacing_um: 500.0,
            dmd_length_um: 10.0,
            r_resonator_um: 50.0,
            n_eff: 2.2645,
            n_g_pic: 2.3862,
            n_g_dmd: 2.4513,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSection {
    pub tau_reset_us: f64,
    pub t_e_to_n_us: f64,
    pub t_n_to_e_ns: f64,
    pub attempt_ns: f64,
}

impl Default for TimingSection {
    fn default() -> Self {
        Self {
            tau_reset_us: 5.0,
            t_e_to_n_us: 16.0,
            t_n_to_e_ns: 30.0,
            attempt_ns: 200.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub a: f64,
    pub b: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitModel::default();
        Self { a: f.a, b: f.b }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceSection {
    pub t2_nuclear_s: f64,
    pub t2_electron_s: f64,
    /// Omitted means calibrate against the built-in anchor.
    pub calibration_constant: Option<f64>,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        Self {
            t2_nuclear_s: 1.0,
            t2_electron_s: 1e-2,
            calibration_constant: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub fig3_cooperativity: Grid,
    pub fig3_coupling: Grid,
    pub fig4_couplings: Vec<f64>,
    pub fig4a_max_depth: usize,
    pub fig4c_depth: usize,
    pub fig4c_coupling: Grid,
    pub fig5_max_depth: usize,
    pub figs1_detuning_over_kappa: Grid,
    pub figs2_phase_points: usize,
    pub figs3_phase_points: usize,
    pub figs7_max_depth: usize,
    pub physical_error_rate: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            fig3_cooperativity: Grid::new(1.0, 100.0, 50),
            fig3_coupling: Grid::new(0.5, 0.995, 50),
            fig4_couplings: vec![0.95, 0.965, 0.98, 0.995],
            fig4a_max_depth: 16,
            fig4c_depth: 6,
            fig4c_coupling: Grid::new(0.9, 0.995, 39),
            fig5_max_depth: 17,
            figs1_detuning_over_kappa: Grid::new(-1.5, 1.5, 601),
            figs2_phase_points: 401,
            figs3_phase_points: 101,
            figs7_max_depth: 16,
            physical_error_rate: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub experiment: Option<String>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub trials: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            experiment: None,
            out_dir: PathBuf::from("out"),
            seed: 7,
            trials: 1000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub cavity: CavitySection,
    pub loss: LossSection,
    pub geometry: GeometrySection,
    pub timing: TimingSection,
    pub fit: FitSection,
    pub coherence: CoherenceSection,
    pub grid: GridSection,
    pub run: RunSection,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    /// Reads `path` (or defaults), applies `QRAM__SECTION__KEY` overrides from
    /// `env`, and validates.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut doc: toml::Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| invalid(format!("cannot read config {}: {e}", p.display())))?;
                text.parse()
                    .map_err(|e| invalid(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in env {
            if let Some(rest) = key.strip_prefix(ENV_PREFIX) {
                apply_override(&mut doc, rest, &value)?;
            }
        }
        let cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e| invalid(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering, ignoring where outputs go
    /// and which experiment was selected.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.run.out_dir = PathBuf::new();
        canon.run.experiment = None;
        hex::encode(Sha256::digest(canon.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.cavity;
        let positive = [
            ("cavity.kappa_ghz", c.kappa_ghz),
            ("cavity.gamma_mhz", c.gamma_mhz),
            ("cavity.omega_c_thz", c.omega_c_thz),
            ("cavity.cooperativity", c.cooperativity),
            ("geometry.r_resonator_um", self.geometry.r_resonator_um),
            ("geometry.n_eff", self.geometry.n_eff),
            ("geometry.n_g_pic", self.geometry.n_g_pic),
            ("geometry.n_g_dmd", self.geometry.n_g_dmd),
            ("coherence.t2_nuclear_s", self.coherence.t2_nuclear_s),
            ("coherence.t2_electron_s", self.coherence.t2_electron_s),
            ("fit.a", self.fit.a),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive (got {v})")));
            }
        }
        let non_negative = [
            ("loss.eta_str_db_per_m", self.loss.eta_str_db_per_m),
            ("loss.eta_bend_db_per_m", self.loss.eta_bend_db_per_m),
            ("loss.eta_det_db", self.loss.eta_det_db),
            ("loss.bends_per_layer", self.loss.bends_per_layer),
            ("loss.bend_length_um", self.loss.bend_length_um),
            ("geometry.pic_spacing_um", self.geometry.pic_spacing_um),
            ("geometry.dmd_length_um", self.geometry.dmd_length_um),
            ("timing.tau_reset_us", self.timing.tau_reset_us),
            ("timing.t_e_to_n_us", self.timing.t_e_to_n_us),
            ("timing.t_n_to_e_ns", self.timing.t_n_to_e_ns),
            ("timing.attempt_ns", self.timing.attempt_ns),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be non-negative (got {v})")));
            }
        }
        if !(c.kappa_wg_over_kappa > 0.0 && c.kappa_wg_over_kappa <= 1.0) {
            return Err(invalid(format!(
                "invariant kappa_wg <= kappa violated: cavity.kappa_wg_over_kappa = {} must lie in (0, 1]",
                c.kappa_wg_over_kappa
            )));
        }
        if let Some(p) = self.loss.eta_path {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("loss.eta_path must lie in [0, 1]"));
            }
        }
        if let Some(k) = self.coherence.calibration_constant {
            if !(k.is_finite() && k >= 0.0) {
                return Err(invalid(
                    "coherence.calibration_constant must be non-negative",
                ));
            }
        }
        let g = &self.grid;
        if g.fig4_couplings.iter().any(|k| !(*k > 0.0 && *k <= 1.0)) {
            return Err(invalid("grid.fig4_couplings must lie in (0, 1]"));
        }
        if g.fig3_coupling.start <= 0.0
            || g.fig3_coupling.stop > 1.0
            || g.fig4c_coupling.start <= 0.0
            || g.fig4c_coupling.stop > 1.0
        {
            return Err(invalid("coupling grids must lie in (0, 1]"));
        }
        if g.fig3_cooperativity.start <= 0.0 {
            return Err(invalid("grid.fig3_cooperativity must be positive"));
        }
        if g.fig4a_max_depth == 0
            || g.fig4c_depth == 0
            || g.fig5_max_depth == 0
            || g.figs7_max_depth == 0
        {
            return Err(invalid("depths must be at least 1"));
        }
        if g.fig5_max_depth > 24 {
            return Err(invalid("grid.fig5_max_depth is capped at 24"));
        }
        if !(0.0..=1.0).contains(&g.physical_error_rate) {
            return Err(invalid("grid.physical_error_rate must lie in [0, 1]"));
        }
        if self.run.trials == 0 {
            return Err(invalid("run.trials must be positive"));
        }
        Ok(())
    }

    pub fn cavity_base(&self) -> CavityBase {
        CavityBase {
            gamma: TAU * self.cavity.gamma_mhz * 1e6,
            kappa: TAU * self.cavity.kappa_ghz * 1e9,
            omega_c: TAU * self.cavity.omega_c_thz * 1e12,
        }
    }

    pub fn cavity_params(
        &self,
        cooperativity: f64,
        coupling: f64,
    ) -> Result<CavityParams, CliError> {
        Ok(self.cavity_base().params(cooperativity, coupling)?)
    }

    pub fn layout(&self) -> TreeLayout {
        TreeLayout {
            pic_spacing: self.geometry.pic_spacing_um * 1e-6,
            dmd_length: self.geometry.dmd_length_um * 1e-6,
            bends_per_layer: self.loss.bends_per_layer,
            bend_length: self.loss.bend_length_um * 1e-6,
            group_index_pic: self.geometry.n_g_pic,
            group_index_dmd: self.geometry.n_g_dmd,
            reset_time: self.timing.tau_reset_us * 1e-6,
        }
    }

    /// Loss model with ideal reflectances; experiments substitute the cavity's.
    pub fn loss_model(&self) -> LossModel {
        LossModel {
            propagation_loss_straight: self.loss.eta_str_db_per_m,
            propagation_loss_bend: self.loss.eta_bend_db_per_m,
            per_layer_straight: None,
            detection_efficiency: db_to_linear(self.loss.eta_det_db),
            path_efficiency: self.loss.eta_path,
            r_cav: 1.0,
            r_m: 1.0,
        }
    }

    pub fn timing(&self) -> TeleportTiming {
        TeleportTiming {
            reset_time: self.timing.tau_reset_us * 1e-6,
            swap_to_nuclear_time: self.timing.t_e_to_n_us * 1e-6,
            swap_to_broker_time: self.timing.t_n_to_e_ns * 1e-9,
            attempt_time: self.timing.attempt_ns * 1e-9,
        }
    }

    pub fn coherence_model(&self) -> Result<CoherenceModel, CliError> {
        let k = match self.coherence.calibration_constant {
            Some(k) => k,
            None => CoherenceModel::calibrate(self.timing().swap_to_nuclear_time)?,
        };
        Ok(CoherenceModel::new(
            self.coherence.t2_nuclear_s,
            self.coherence.t2_electron_s,
            k,
        )?)
    }

    pub fn scheme_context(&self) -> Result<SchemeContext, CliError> {
        Ok(SchemeContext {
            cooperativity: self.cavity.cooperativity,
            base: self.cavity_base(),
            layout: self.layout(),
            loss: self.loss_model(),
            timing: self.timing(),
            fit: FitModel::new(self.fit.a, self.fit.b)?,
            coherence: self.coherence_model()?,
        })
    }

    /// Unbiased ring referenced to the cavity frequency.
    pub fn ring(&self) -> Result<RingGeometry, CliError> {
        Ok(RingGeometry::new(
            self.geometry.r_resonator_um * 1e-6,
            self.geometry.n_eff,
            self.geometry.n_g_pic,
            0.0,
            self.cavity_base().omega_c,
        )?)
    }
}

/// Sets `section.key` (case-insensitive, `__`-separated) to `raw`, parsed as a
/// TOML value when possible and as a string otherwise.
fn apply_override(doc: &mut toml::Table, path: &str, raw: &str) -> Result<(), CliError> {
    let parts: Vec<String> = path.split("__").map(|p| p.to_ascii_lowercase()).collect();
    if parts.iter().any(String::is_empty) {
        return Err(invalid(format!(
            "malformed override variable {ENV_PREFIX}{path}"
        )));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, sections) = parts.split_last().expect("non-empty");
    let mut table = doc;
    for s in sections {
        let entry = table
            .entry(s.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| invalid(format!("override {ENV_PREFIX}{path}: {s} is not a section")))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            RunConfig::from_toml("[cavity]\nkappa_hz = 1.0\n"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("[nonsense]\n"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn env_overrides() {
        let env = vec![
            ("QRAM__RUN__SEED".to_string(), "11".to_string()),
            (
                "QRAM__CAVITY__KAPPA_WG_OVER_KAPPA".to_string(),
                "0.99".to_string(),
            ),
            ("QRAM__RUN__OUT_DIR".to_string(), "some/dir".to_string()),
            ("OTHER".to_string(), "x".to_string()),
        ];
        let cfg = RunConfig::load(None, env).unwrap();
        assert_eq!(cfg.run.seed, 11);
        assert_eq!(cfg.cavity.kappa_wg_over_kappa, 0.99);
        assert_eq!(cfg.run.out_dir, PathBuf::from("some/dir"));
        assert_ne!(cfg.hash(), RunConfig::load(None, no_env()).unwrap().hash());
    }

    #[test]
    fn over_coupling_beyond_kappa_is_rejected() {
        let err = RunConfig::from_toml("[cavity]\nkappa_wg_over_kappa = 1.2\n").unwrap_err();
        assert!(err.to_string().contains("kappa_wg <= kappa"));
    }

    #[test]
    fn grid_values() {
        assert_eq!(Grid::new(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Grid::new(2.0, 5.0, 1).values(), vec![2.0]);
    }
}
