use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::filter::FilterConfig;
use crate::lorenz63::{Lorenz63Params, REFERENCE_INITIAL_STATE};
use crate::obs::{ObsModel, ObsOperator};
use crate::srsw::SrswScales;

use super::HarnessError;

/// One twin experiment. Serialised as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelConfig,
    pub filter: FilterConfig,
    pub obs: ObsConfig,
    /// Run length in model steps.
    pub steps: usize,
    /// Steps between observations.
    pub assimilation_interval: usize,
    /// When false, observations are still generated but never assimilated.
    #[serde(default = "yes")]
    pub assimilate: bool,
    /// Std of the initial ensemble around the truth (Lorenz: model units;
    /// SRSW: metres of height, applied as a balanced spectral field).
    pub initial_uncertainty: f64,
    pub truth_seed: u64,
    pub ensemble_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Lorenz63 {
        params: Lorenz63Params,
        #[serde(default = "reference_state")]
        initial_state: [f64; 3],
    },
    Srsw(SrswSetup),
}

fn reference_state() -> [f64; 3] {
    REFERENCE_INITIAL_STATE
}

/// Dimensional SRSW set-up. The solver itself runs in model units; see
/// [`SrswScales`] for the mapping (height anomaly `d` metres becomes the
/// pressure anomaly `d / (H eps F)`, 90 s becomes `90 U / L`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrswSetup {
    #[serde(default)]
    pub scales: SrswScales,
    pub nx: usize,
    pub ny: usize,
    pub dt_s: f64,
    pub noise: SrswNoiseConfig,
    /// Height drop across the zonal jet of the initial truth (m).
    pub jet_m: f64,
    /// Std of the balanced spectral perturbation added to the initial
    /// truth (m).
    pub truth_perturbation_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrswNoiseConfig {
    /// Pointwise std of the pressure noise field, as metres of height.
    /// Zero switches the transport noise off.
    pub amplitude_m: f64,
    /// Spectral width in inverse model lengths.
    pub sigma: f64,
    /// Balance constant linking the pressure field to the noise velocity.
    pub balance: f64,
    /// Extended-grid factors; x is periodic, so 1 keeps the noise periodic.
    pub extend_x: usize,
    pub extend_y: usize,
}

impl Default for SrswNoiseConfig {
    fn default() -> Self {
        Self {
            amplitude_m: 200.0,
            sigma: 1.0,
            balance: 0.05,
            extend_x: 1,
            extend_y: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObsConfig {
    /// Explicit operator on the state vector, error in state units.
    Operator {
        operator: ObsOperator,
        obs_error_std: f64,
    },
    /// SRSW height at `count` seeded pseudo-random cell centres.
    HeightSites {
        count: usize,
        site_seed: u64,
        obs_error_m: f64,
    },
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        let c: Self = serde_json::from_str(s).map_err(|e| HarnessError::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Sets both seeds from one value.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.truth_seed = seed;
        self.ensemble_seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.assimilation_interval < 1 {
            return Err(ConfigError::new("assimilation_interval", "must be at least 1"));
        }
        if self.steps < self.assimilation_interval {
            return Err(ConfigError::new("steps", "run shorter than one assimilation interval"));
        }
        if !(self.initial_uncertainty >= 0.0 && self.initial_uncertainty.is_finite()) {
            return Err(ConfigError::new("initial_uncertainty", "must be non-negative"));
        }
        self.filter.validate()?;
        match &self.model {
            ModelConfig::Lorenz63 { params, initial_state } => {
                params.validate()?;
                if initial_state.iter().any(|v| !v.is_finite()) {
                    return Err(ConfigError::new("initial_state", "must be finite"));
                }
                match &self.obs {
                    ObsConfig::Operator { operator, obs_error_std } => {
                        ObsModel::new(operator.clone(), *obs_error_std).validate(3)?
                    }
                    ObsConfig::HeightSites { .. } => {
                        return Err(ConfigError::new("obs", "height sites need the srsw model"))
                    }
                }
            }
            ModelConfig::Srsw(s) => {
                s.scales.validate()?;
                s.scales.grid(s.nx, s.ny)?;
                if !(s.dt_s > 0.0) {
                    return Err(ConfigError::new("dt_s", "must be positive"));
                }
                let n = &s.noise;
                if !(n.amplitude_m >= 0.0 && n.amplitude_m.is_finite()) {
                    return Err(ConfigError::new("noise.amplitude_m", "must be non-negative"));
                }
                if !(n.sigma > 0.0) {
                    return Err(ConfigError::new("noise.sigma", "must be positive"));
                }
                if n.extend_x < 1 || n.extend_y < 1 || (n.extend_x == 1 && n.extend_y == 1) {
                    return Err(ConfigError::new("noise.extend", "extended grid must exceed the physical grid"));
                }
                if !(s.jet_m.is_finite() && s.truth_perturbation_m >= 0.0) {
                    return Err(ConfigError::new("srsw", "invalid initial-state settings"));
                }
                match &self.obs {
                    ObsConfig::HeightSites { count, obs_error_m, .. } => {
                        if *count == 0 || *count > s.nx * s.ny {
                            return Err(ConfigError::new("obs.count", "must be between 1 and the cell count"));
                        }
                        if !(*obs_error_m > 0.0) {
                            return Err(ConfigError::new("obs.obs_error_m", "must be positive"));
                        }
                    }
                    ObsConfig::Operator { operator, obs_error_std } => {
                        let dim = 2 * s.nx * s.ny + s.nx * (s.ny + 1);
                        ObsModel::new(operator.clone(), *obs_error_std).validate(dim)?
                    }
                }
            }
        }
        Ok(())
    }
}
