//! Bootstrap particle filter with adaptive tempering and MCMC jittering.
//!
//! One analysis splits the likelihood into powers `g^{dphi_1}, g^{dphi_2},
//! ...` with `sum dphi_r = 1`. Each increment is the largest one that keeps
//! the ESS at the threshold; after weighting, the ensemble is resampled and
//! duplicated particles are moved by a Metropolis–Hastings kernel that
//! perturbs their driving noise path and re-runs the model from the previous
//! analysis time.

mod jitter;
mod resample;
mod tempering;
mod trace;

pub use jitter::{jitter_mcmc, JitterOutcome};
pub use resample::{duplicate_flags, systematic_resample};
pub use tempering::{ess, find_temperature, tempered_weights, PHI_QUANTUM};
pub use trace::{StageRecord, TemperingTrace};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, ForwardModel, NoiseIncrement, StateVector};
use crate::error::{ConfigError, FilterError};
use crate::rng::{Purpose, RngStream};

/// Filter tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub n_particles: usize,
    /// Absolute ESS threshold (a particle count, not a fraction).
    pub ess_threshold: f64,
    pub jitter_rho: f64,
    pub mcmc_steps: usize,
    pub max_tempering_iters: usize,
    /// Accepted distance between the bisected ESS and the threshold.
    pub bisection_tol: f64,
}

impl FilterConfig {
    /// Defaults: threshold `N/2`, 5 MCMC steps, `rho = 0.99`, tolerance
    /// `0.01 N`, at most 100 tempering stages.
    pub fn with_particles(n: usize) -> Self {
        Self {
            n_particles: n,
            ess_threshold: n as f64 / 2.0,
            jitter_rho: 0.99,
            mcmc_steps: 5,
            max_tempering_iters: 100,
            bisection_tol: 0.01 * n as f64,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_particles < 2 {
            return Err(ConfigError::new("n_particles", "need at least 2 particles"));
        }
        if !(self.ess_threshold > 1.0 && self.ess_threshold <= self.n_particles as f64) {
            return Err(ConfigError::new(
                "ess_threshold",
                format!("{} not in (1, {}]", self.ess_threshold, self.n_particles),
            ));
        }
        if !(self.jitter_rho > 0.0 && self.jitter_rho < 1.0) {
            return Err(ConfigError::new("jitter_rho", "must lie in (0, 1)"));
        }
        if self.mcmc_steps < 1 {
            return Err(ConfigError::new("mcmc_steps", "must be at least 1"));
        }
        if self.max_tempering_iters < 1 {
            return Err(ConfigError::new("max_tempering_iters", "must be at least 1"));
        }
        if !(self.bisection_tol > 0.0 && self.bisection_tol.is_finite()) {
            return Err(ConfigError::new("bisection_tol", "must be positive"));
        }
        Ok(())
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::with_particles(50)
    }
}

/// Log-likelihood of a state given the current observation.
pub trait LogLikelihood: Sync {
    fn log_likelihood(&self, x: &StateVector) -> f64;
}

impl<F: Fn(&StateVector) -> f64 + Sync> LogLikelihood for F {
    fn log_likelihood(&self, x: &StateVector) -> f64 {
        self(x)
    }
}

/// Per-particle record of the last forecast segment: the state at the
/// previous analysis time and the noise increments that carried it to the
/// current state.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastWindow {
    pub anchors: Vec<StateVector>,
    pub paths: Vec<Vec<NoiseIncrement>>,
}

impl ForecastWindow {
    pub fn new(anchors: Vec<StateVector>) -> Self {
        let n = anchors.len();
        Self {
            anchors,
            paths: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Starts a new segment at the given states.
    pub fn reset(&mut self, anchors: &[StateVector]) {
        self.anchors = anchors.to_vec();
        for p in &mut self.paths {
            p.clear();
        }
        self.paths.resize(anchors.len(), Vec::new());
    }

    fn reindex(&mut self, ancestors: &[usize]) {
        self.anchors = ancestors.iter().map(|&a| self.anchors[a].clone()).collect();
        self.paths = ancestors.iter().map(|&a| self.paths[a].clone()).collect();
    }
}

/// Seed and time index that key every random draw of one analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisKey {
    pub seed: u64,
    pub step: u64,
}

pub(crate) fn evaluate_logliks<L: LogLikelihood>(states: &[StateVector], lik: &L) -> Vec<f64> {
    states
        .par_iter()
        .map(|x| {
            if x.is_finite() {
                let l = lik.log_likelihood(x);
                if l.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    l
                }
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Runs the tempering loop at one assimilation time.
///
/// `forecast` must carry uniform weights (it is the propagated analysis of
/// the previous cycle). `window` is resampled alongside the particles and
/// updated with any accepted jitter moves. Returns the equally weighted
/// analysis ensemble and the stage-by-stage trace.
pub fn assimilate<M, L>(
    forecast: &Ensemble,
    window: &mut ForecastWindow,
    model: &M,
    lik: &L,
    cfg: &FilterConfig,
    key: AnalysisKey,
) -> Result<(Ensemble, TemperingTrace), FilterError>
where
    M: ForwardModel + ?Sized,
    L: LogLikelihood,
{
    cfg.validate()
        .map_err(|e| FilterError::InvalidInput(e.to_string()))?;
    let n = forecast.len();
    if n != cfg.n_particles || window.len() != n {
        return Err(FilterError::InvalidInput(format!(
            "ensemble of {n}, window of {}, config expects {}",
            window.len(),
            cfg.n_particles
        )));
    }
    let uniform = 1.0 / n as f64;
    if forecast
        .weights()
        .iter()
        .any(|w| (w - uniform).abs() > 1e-12)
    {
        return Err(FilterError::InvalidInput(
            "forecast ensemble must be equally weighted".into(),
        ));
    }

    let mut states: Vec<StateVector> = forecast.particles().to_vec();
    let mut logliks = evaluate_logliks(&states, lik);
    let mut trace = TemperingTrace {
        step: key.step,
        stages: Vec::new(),
    };
    let mut phi = 0.0_f64;

    while phi < 1.0 {
        if trace.stages.len() >= cfg.max_tempering_iters {
            return Err(FilterError::TemperingExhausted {
                max_iters: cfg.max_tempering_iters,
                phi,
                trace: Box::new(trace),
            });
        }
        let stage = trace.stages.len() as u32;
        let delta = find_temperature(&logliks, phi, cfg)?;
        let weights = tempered_weights(&logliks, delta)?;
        let ess_pre = tempering::ess_unchecked(&weights);
        phi = if delta == 1.0 - phi { 1.0 } else { phi + delta };

        let mut rng = RngStream::keyed(key.seed, 0, key.step, Purpose::Resample { stage });
        let ancestors = systematic_resample(&weights, &mut rng)?;
        states = ancestors.iter().map(|&a| states[a].clone()).collect();
        logliks = ancestors.iter().map(|&a| logliks[a]).collect();
        window.reindex(&ancestors);
        let dup = duplicate_flags(&ancestors, n);
        let duplicates = dup.iter().filter(|d| **d).count();
        // Moving only the duplicates leaves the once-selected particles
        // conditioned on their own weight, which biases the analysis; once a
        // stage has duplicates every particle is moved.
        let moves = vec![duplicates > 0; n];

        let outcome = jitter_mcmc(
            &mut states,
            &mut logliks,
            window,
            &moves,
            model,
            lik,
            phi,
            cfg,
            key,
            stage,
        )?;
        log::debug!(
            "step {} stage {stage}: dphi {delta:.3e} phi {phi:.6} ess {ess_pre:.2} dup {duplicates} accept {:?}",
            key.step,
            outcome.acceptance_rate()
        );
        trace.stages.push(StageRecord {
            delta_phi: delta,
            phi,
            ess_pre,
            ess_post: n as f64,
            accept_rate: outcome.acceptance_rate(),
            duplicates,
            proposals: outcome.proposals,
            rejected_nonfinite: outcome.rejected_nonfinite,
            ancestors,
        });
    }

    let analysis = Ensemble::uniform(states, forecast.time_index)?;
    Ok((analysis, trace))
}
