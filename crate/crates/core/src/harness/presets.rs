//! Named scenarios.
//!
//! Lorenz: 50 particles, 500 steps of 0.01, observations every 20 steps,
//! initial uncertainty 1, observation error and model error 0.1
//! (observation error 1 in `lorenz-standard-obs1` and the nonlinear ones).
//! SRSW: 64x32 channel, 90 s steps, 50 particles, pressure noise 200 m
//! (50 m in the frequent/dense/long scenarios).

use crate::filter::FilterConfig;
use crate::lorenz63::{Lorenz63Params, REFERENCE_INITIAL_STATE};
use crate::obs::ObsOperator;
use crate::srsw::SrswScales;

use super::config::{ExperimentConfig, ModelConfig, ObsConfig, SrswNoiseConfig, SrswSetup};
use super::HarnessError;

pub const PRESET_NAMES: [&str; 10] = [
    "lorenz-noda",
    "lorenz-standard",
    "lorenz-standard-obs1",
    "lorenz-nl-full",
    "lorenz-nl-partial",
    "srsw-noda",
    "srsw-standard",
    "srsw-freq",
    "srsw-dense",
    "srsw-long",
];

fn lorenz(name: &str, operator: ObsOperator, assimilate: bool) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        model: ModelConfig::Lorenz63 {
            params: Lorenz63Params::default(),
            initial_state: REFERENCE_INITIAL_STATE,
        },
        filter: FilterConfig::with_particles(50),
        obs: ObsConfig::Operator {
            operator,
            obs_error_std: 0.1,
        },
        steps: 500,
        assimilation_interval: 20,
        assimilate,
        initial_uncertainty: 1.0,
        truth_seed: 1,
        ensemble_seed: 2,
        output_dir: None,
    }
}

/// Observation error 1, the value used for the published filter figures;
/// the prose value 0.1 stays in `lorenz-standard`.
fn lorenz_nl(name: &str, operator: ObsOperator) -> ExperimentConfig {
    let mut c = lorenz(name, operator.clone(), true);
    c.obs = ObsConfig::Operator {
        operator,
        obs_error_std: 1.0,
    };
    c
}

fn srsw(
    name: &str,
    steps: usize,
    interval: usize,
    sites: usize,
    noise_m: f64,
    assimilate: bool,
) -> ExperimentConfig {
    let mut filter = FilterConfig::with_particles(50);
    filter.mcmc_steps = 3;
    filter.max_tempering_iters = 400;
    ExperimentConfig {
        name: name.into(),
        model: ModelConfig::Srsw(SrswSetup {
            scales: SrswScales::default(),
            nx: 64,
            ny: 32,
            dt_s: 90.0,
            noise: SrswNoiseConfig {
                amplitude_m: noise_m,
                ..SrswNoiseConfig::default()
            },
            jet_m: 400.0,
            truth_perturbation_m: 50.0,
        }),
        filter,
        obs: ObsConfig::HeightSites {
            count: sites,
            site_seed: 7,
            obs_error_m: 10.0,
        },
        steps,
        assimilation_interval: interval,
        assimilate,
        initial_uncertainty: 20.0,
        truth_seed: 1,
        ensemble_seed: 2,
        output_dir: None,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, HarnessError> {
    Ok(match name {
        "lorenz-noda" => lorenz(name, ObsOperator::Identity, false),
        "lorenz-standard" => lorenz(name, ObsOperator::Identity, true),
        "lorenz-standard-obs1" => lorenz_nl(name, ObsOperator::Identity),
        "lorenz-nl-full" => lorenz_nl(name, ObsOperator::SquareAll),
        "lorenz-nl-partial" => lorenz_nl(name, ObsOperator::SquareFirst),
        "srsw-noda" => srsw(name, 50, 10, 1, 200.0, false),
        "srsw-standard" => srsw(name, 50, 10, 1, 200.0, true),
        "srsw-freq" => srsw(name, 50, 5, 1, 50.0, true),
        "srsw-dense" => srsw(name, 50, 5, 100, 50.0, true),
        "srsw-long" => srsw(name, 100, 5, 5, 50.0, true),
        other => return Err(HarnessError::UnknownPreset(other.to_string())),
    })
}

/// All presets in a fixed order.
pub fn scenario_presets() -> Vec<ExperimentConfig> {
    PRESET_NAMES.iter().map(|n| preset(n).unwrap()).collect()
}
