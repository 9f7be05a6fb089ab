use rayon::prelude::*;

use crate::ensemble::{mix_noise, ForwardModel, NoiseIncrement, StateVector};
use crate::error::FilterError;
use crate::rng::{Purpose, RngStream};

use super::{AnalysisKey, FilterConfig, ForecastWindow, LogLikelihood};

/// Counts from one round of jittering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JitterOutcome {
    pub proposals: usize,
    pub accepted: usize,
    pub rejected_nonfinite: usize,
}

impl JitterOutcome {
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposals > 0).then(|| self.accepted as f64 / self.proposals as f64)
    }
}

struct ChainResult {
    state: StateVector,
    loglik: f64,
    path: Option<Vec<NoiseIncrement>>,
    accepted: usize,
    nonfinite: usize,
}

/// Metropolis–Hastings moves on the noise paths of flagged particles.
///
/// For every particle with `flags[l]` set, runs `cfg.mcmc_steps` iterations
/// of: propose `W' = rho W + sqrt(1 - rho^2) Z` increment by increment,
/// re-propagate from the particle's anchor, accept with probability
/// `min(1, exp(phi * (loglik(x') - loglik(x))))`. The proposal is reversible
/// for the Gaussian path prior, so only the tempered likelihood enters the
/// ratio. Unflagged particles are untouched. A proposal whose propagation
/// fails or leaves non-finite values is rejected.
#[allow(clippy::too_many_arguments)]
pub fn jitter_mcmc<M, L>(
    states: &mut [StateVector],
    logliks: &mut [f64],
    window: &mut ForecastWindow,
    flags: &[bool],
    model: &M,
    lik: &L,
    phi: f64,
    cfg: &FilterConfig,
    key: AnalysisKey,
    stage: u32,
) -> Result<JitterOutcome, FilterError>
where
    M: ForwardModel + ?Sized,
    L: LogLikelihood,
{
    let n = states.len();
    if logliks.len() != n || flags.len() != n || window.len() != n {
        return Err(FilterError::InvalidInput("jitter inputs differ in length".into()));
    }
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(FilterError::InvalidInput(format!("temperature {phi} outside (0, 1]")));
    }
    let rho = cfg.jitter_rho;

    let results: Vec<Option<ChainResult>> = (0..n)
        .into_par_iter()
        .map(|l| {
            if !flags[l] || window.paths[l].is_empty() {
                return Ok(None);
            }
            let anchor = &window.anchors[l];
            let mut path = window.paths[l].clone();
            let mut state = states[l].clone();
            let mut ll = logliks[l];
            let mut moved = false;
            let mut accepted = 0;
            let mut nonfinite = 0;
            for iter in 0..cfg.mcmc_steps as u32 {
                let mut zr = RngStream::keyed(
                    key.seed,
                    l as u64,
                    key.step,
                    Purpose::Proposal { stage, iter },
                );
                let proposal = path
                    .iter()
                    .map(|w| mix_noise(w, &model.sample_noise(&mut zr), rho))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut ar =
                    RngStream::keyed(key.seed, l as u64, key.step, Purpose::Accept { stage, iter });
                let u = ar.uniform();
                let candidate = match model.propagate(anchor, &proposal) {
                    Ok(x) if x.is_finite() => x,
                    _ => {
                        nonfinite += 1;
                        continue;
                    }
                };
                let ll_new = lik.log_likelihood(&candidate);
                if ll_new.is_nan() {
                    nonfinite += 1;
                    continue;
                }
                // log(0) = -inf always accepts an uphill move
                let log_ratio = phi * (ll_new - ll);
                if u.ln() < log_ratio || (ll == f64::NEG_INFINITY && ll_new > ll) {
                    state = candidate;
                    ll = ll_new;
                    path = proposal;
                    moved = true;
                    accepted += 1;
                }
            }
            Ok(Some(ChainResult {
                state,
                loglik: ll,
                path: moved.then_some(path),
                accepted,
                nonfinite,
            }))
        })
        .collect::<Result<Vec<_>, FilterError>>()?;

    let mut out = JitterOutcome::default();
    for (l, r) in results.into_iter().enumerate() {
        let Some(r) = r else { continue };
        out.proposals += cfg.mcmc_steps;
        out.accepted += r.accepted;
        out.rejected_nonfinite += r.nonfinite;
        states[l] = r.state;
        logliks[l] = r.loglik;
        if let Some(p) = r.path {
            window.paths[l] = p;
        }
    }
    Ok(out)
}
