use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capacity::McSettings;
use crate::channel::{db_to_linear, dbm_to_watts, DuplexConfig, DuplexMode, QosConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    sample_matern_hcpp, CellTier, HcppParams, MacroBs, NetworkTopology, Point, Region, SaturationWarning,
};

use super::topology_file::load_topology;

/// Experiment description as read from a TOML scenario file. Every field has
/// a default; an empty file describes the reference macro + pico deployment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub region: RegionSection,
    pub macro_bs: MacroSection,
    pub small_cells: SmallCellSection,
    pub duplex: DuplexSection,
    pub qos: QosSection,
    pub radio: RadioSection,
    pub seeds: SeedSection,
    pub trials: TrialSection,
    /// Replay a saved topology instead of sampling one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionSection {
    pub macro_radius_m: f64,
}

impl Default for RegionSection {
    fn default() -> Self {
        Self { macro_radius_m: 1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroSection {
    pub power_dbm: f64,
    pub alpha: f64,
}

impl Default for MacroSection {
    fn default() -> Self {
        Self { power_dbm: 46.0, alpha: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmallCellSection {
    pub power_dbm: f64,
    pub radius_m: f64,
    pub alpha: f64,
    pub density_per_km2: f64,
    pub hard_core_m: f64,
    /// Defaults to the cell nearest to (macro_radius / 2, 0).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tagged_index: Option<usize>,
}

impl Default for SmallCellSection {
    fn default() -> Self {
        Self {
            power_dbm: 35.0,
            radius_m: 90.0,
            alpha: 3.0,
            density_per_km2: 5.0,
            hard_core_m: 180.0,
            tagged_index: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuplexSection {
    pub mode: DuplexMode,
    /// Linear SI cancellation in dB; mutually exclusive with `eta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub kappa: f64,
}

impl Default for DuplexSection {
    fn default() -> Self {
        Self { mode: DuplexMode::Fd, eta_db: None, eta: None, kappa: 1.0 }
    }
}

impl DuplexSection {
    pub fn eta_linear(&self) -> Result<f64> {
        match (self.eta_db, self.eta) {
            (Some(_), Some(_)) => Err(Error::Validation("duplex: give either `eta_db` or `eta`, not both".into())),
            (Some(db), None) => Ok(db_to_linear(db)),
            (None, Some(eta)) => Ok(eta),
            (None, None) => Ok(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosSection {
    pub theta: f64,
    pub frame_time_s: f64,
    pub bandwidth_hz: f64,
}

impl Default for QosSection {
    fn default() -> Self {
        Self { theta: 1e-3, frame_time_s: 0.5e-3, bandwidth_hz: 180e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub noise_dbm: f64,
    pub ue_power_dbm: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self { noise_dbm: -120.0, ue_power_dbm: 23.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub topology: u64,
    pub trials: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self { topology: 1, trials: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSection {
    pub exact: u64,
    pub lower_bound: u64,
}

impl Default for TrialSection {
    fn default() -> Self {
        Self { exact: 20_000, lower_bound: 20_000 }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn duplex(&self) -> Result<DuplexConfig> {
        DuplexConfig::new(
            self.duplex.mode,
            self.duplex.eta_linear()?,
            self.duplex.kappa,
            dbm_to_watts(self.radio.ue_power_dbm),
        )
    }

    pub fn qos(&self) -> Result<QosConfig> {
        QosConfig::new(self.qos.theta, self.qos.frame_time_s, self.qos.bandwidth_hz)
    }

    pub fn noise_w(&self) -> f64 {
        dbm_to_watts(self.radio.noise_dbm)
    }

    pub fn hcpp_params(&self) -> Result<HcppParams> {
        let s = &self.small_cells;
        Ok(HcppParams {
            region: Region::new(self.region.macro_radius_m)?,
            macro_bs: MacroBs {
                position: Point::ORIGIN,
                power_w: dbm_to_watts(self.macro_bs.power_dbm),
                alpha: self.macro_bs.alpha,
            },
            tier: CellTier { radius: s.radius_m, power_w: dbm_to_watts(s.power_dbm), alpha: s.alpha },
            density: s.density_per_km2 * 1e-6,
            hard_core: s.hard_core_m,
        })
    }

    /// Checks every field against the model's preconditions.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Validation(_) => e,
            other => Error::Validation(other.to_string()),
        };
        self.duplex().map_err(wrap)?;
        self.qos().map_err(wrap)?;
        let p = self.hcpp_params().map_err(wrap)?;
        if !(p.density >= 0.0 && p.density.is_finite()) {
            return Err(Error::Validation(format!(
                "small_cells.density_per_km2 must be non-negative, got {}",
                self.small_cells.density_per_km2
            )));
        }
        if !(p.tier.radius > 0.0) {
            return Err(Error::Validation(format!("small_cells.radius_m must be positive, got {}", p.tier.radius)));
        }
        if !(p.hard_core >= 2.0 * p.tier.radius) {
            return Err(Error::Validation(format!(
                "small_cells.hard_core_m = {} violates hard_core >= 2 * radius_m = {}",
                p.hard_core,
                2.0 * p.tier.radius
            )));
        }
        if p.tier.radius >= p.region.macro_radius {
            return Err(Error::Validation(format!(
                "small_cells.radius_m = {} does not fit in region.macro_radius_m = {}",
                p.tier.radius, p.region.macro_radius
            )));
        }
        if !(self.macro_bs.alpha >= 0.0 && self.small_cells.alpha >= 0.0) {
            return Err(Error::Validation("path-loss exponents must be non-negative".into()));
        }
        if !self.noise_w().is_finite() || self.noise_w() <= 0.0 {
            return Err(Error::Validation(format!("radio.noise_dbm = {} is not a finite power", self.radio.noise_dbm)));
        }
        if self.trials.exact == 0 || self.trials.lower_bound == 0 {
            return Err(Error::Validation("trial counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Reads and validates a scenario file, filling omitted fields with defaults.
/// A relative `topology_file` is resolved against the scenario's directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut config = ScenarioConfig::from_toml(&text, path)?;
    if let (Some(file), Some(dir)) = (config.topology_file.as_mut(), path.parent()) {
        if file.is_relative() {
            *file = dir.join(&*file);
        }
    }
    Ok(config)
}

/// A resolved scenario: a concrete topology plus link parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub topology: NetworkTopology,
    pub duplex: DuplexConfig,
    pub qos: QosConfig,
    pub noise_w: f64,
    pub saturation: Option<SaturationWarning>,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let (mut topology, saturation) = match &config.topology_file {
            Some(path) => (load_topology(path)?, None),
            None => {
                let sample = sample_matern_hcpp(&config.hcpp_params()?, config.seeds.topology)?;
                (sample.topology, sample.warning)
            }
        };
        if let Some(idx) = config.small_cells.tagged_index {
            topology.tagged = Some(idx);
            topology.validate()?;
        }
        Ok(Self {
            duplex: config.duplex()?,
            qos: config.qos()?,
            noise_w: config.noise_w(),
            config,
            topology,
            saturation,
        })
    }

    pub fn exact_settings(&self) -> McSettings {
        McSettings::new(self.config.trials.exact, self.config.seeds.trials)
    }

    pub fn lower_bound_settings(&self) -> McSettings {
        McSettings::new(self.config.trials.lower_bound, self.config.seeds.trials)
    }

    /// Short hash of the topology, stable across runs and platforms.
    pub fn topology_hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.topology).expect("topology serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }
}
