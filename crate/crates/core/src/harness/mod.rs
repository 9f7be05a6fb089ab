//! Twin experiments: truth generation, ensemble initialisation, the
//! forecast/analysis loop, metrics and output files.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod setup;

use thiserror::Error;

use crate::error::{ConfigError, FilterError, ModelError};
use crate::obs::ObsError;

pub use config::{ExperimentConfig, ModelConfig, ObsConfig, SrswNoiseConfig, SrswSetup};
pub use output::{check_output_dir, read_band_csv, read_metrics_csv, read_traces, write_outputs, write_truth, BandRow, MetricsRow};
pub use presets::{preset, scenario_presets, PRESET_NAMES};
pub use run::{run_experiment, Band, RunMetrics, Series};
pub use setup::{Experiment, Truth};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("filter failure at step {step}: {source}")]
    Filter {
        step: usize,
        #[source]
        source: FilterError,
    },
    #[error("model failure at step {step}: {source}")]
    Model {
        step: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Obs(#[from] ObsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output check failed: {0}")]
    Invalid(String),
}

impl HarnessError {
    /// Process exit code: 2 config, 3 filter degeneracy, 4 model failure,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_) | HarnessError::Config(_) | HarnessError::UnknownPreset(_) => 2,
            HarnessError::Filter { source: FilterError::Model(_), .. } => 4,
            HarnessError::Filter { .. } => 3,
            HarnessError::Model { .. } => 4,
            _ => 1,
        }
    }
}
