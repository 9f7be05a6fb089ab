//! Ensemble data model and the forward-model contract shared by the filter
//! and both dynamical models.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{FilterError, ModelError};
use crate::rng::RngStream;

/// Tolerance on `sum(weights) - 1` accepted by [`Ensemble::new`].
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A flat model state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Index of the first non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.0.iter().position(|v| !v.is_finite())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for StateVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Standard-normal draws consumed by one model step. The layout is owned by
/// the model; the filter only mixes and replays these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseIncrement(pub Vec<f64>);

impl NoiseIncrement {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }
}

impl From<Vec<f64>> for NoiseIncrement {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for NoiseIncrement {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for NoiseIncrement {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// One-step propagator `x_{k+1} = M(x_k, W_k)`.
///
/// `step` must be a deterministic function of `(state, noise)`; this is what
/// lets the filter re-run a trajectory with a modified noise path.
pub trait ForwardModel: Sync {
    fn state_dim(&self) -> usize;

    fn noise_dim(&self) -> usize;

    fn dt(&self) -> f64;

    fn step(&self, state: &StateVector, noise: &NoiseIncrement) -> Result<StateVector, ModelError>;

    fn sample_noise(&self, rng: &mut RngStream) -> NoiseIncrement {
        NoiseIncrement(rng.normals(self.noise_dim()))
    }

    /// Runs `step` once per increment in `path`, starting from `anchor`.
    fn propagate(
        &self,
        anchor: &StateVector,
        path: &[NoiseIncrement],
    ) -> Result<StateVector, ModelError> {
        let mut x = anchor.clone();
        for w in path {
            x = self.step(&x, w)?;
        }
        Ok(x)
    }
}

impl<M: ForwardModel + ?Sized> ForwardModel for &M {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn noise_dim(&self) -> usize {
        (**self).noise_dim()
    }
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn step(&self, state: &StateVector, noise: &NoiseIncrement) -> Result<StateVector, ModelError> {
        (**self).step(state, noise)
    }
    fn sample_noise(&self, rng: &mut RngStream) -> NoiseIncrement {
        (**self).sample_noise(rng)
    }
}

/// Weighted particle approximation of a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    particles: Vec<StateVector>,
    weights: Vec<f64>,
    pub time_index: usize,
}

impl Ensemble {
    pub fn new(
        particles: Vec<StateVector>,
        weights: Vec<f64>,
        time_index: usize,
    ) -> Result<Self, FilterError> {
        if particles.len() < 2 {
            return Err(FilterError::InvalidInput(format!(
                "ensemble needs at least 2 particles, got {}",
                particles.len()
            )));
        }
        if weights.len() != particles.len() {
            return Err(FilterError::InvalidInput(format!(
                "{} weights for {} particles",
                weights.len(),
                particles.len()
            )));
        }
        check_normalized(&weights)?;
        let dim = particles[0].len();
        if let Some(p) = particles.iter().position(|p| p.len() != dim) {
            return Err(FilterError::InvalidInput(format!(
                "particle {p} has dimension {}, expected {dim}",
                particles[p].len()
            )));
        }
        Ok(Self {
            particles,
            weights,
            time_index,
        })
    }

    pub fn uniform(particles: Vec<StateVector>, time_index: usize) -> Result<Self, FilterError> {
        let n = particles.len().max(1);
        Self::new(particles, vec![1.0 / n as f64; n], time_index)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].len()
    }

    pub fn particles(&self) -> &[StateVector] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_particles(self) -> Vec<StateVector> {
        self.particles
    }

    /// Weighted mean `sum_l w_l x_l`, componentwise.
    pub fn mean(&self) -> StateVector {
        ensemble_mean(self)
    }

    /// Unbiased per-component variance. Uses the equal-weight formula, which
    /// is what the filter emits after every analysis.
    pub fn variance(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mean = self.unweighted_mean();
        (0..self.dim())
            .map(|k| {
                let sq: Vec<f64> = self
                    .particles
                    .iter()
                    .map(|p| (p[k] - mean[k]).powi(2))
                    .collect();
                pairwise_sum(&sq) / (n - 1.0)
            })
            .collect()
    }

    fn unweighted_mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut col = vec![0.0; self.len()];
        (0..self.dim())
            .map(|k| {
                for (c, p) in col.iter_mut().zip(&self.particles) {
                    *c = p[k];
                }
                pairwise_sum(&col) / n
            })
            .collect()
    }
}

pub(crate) fn check_normalized(weights: &[f64]) -> Result<(), FilterError> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(FilterError::InvalidInput(format!("invalid weight {w}")));
    }
    let s = pairwise_sum(weights);
    if (s - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(FilterError::InvalidInput(format!(
            "weights sum to {s}, not 1"
        )));
    }
    Ok(())
}

/// Fixed-order pairwise summation. The result depends only on the slice
/// contents and order, never on how the caller was scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Weighted ensemble mean.
pub fn ensemble_mean(e: &Ensemble) -> StateVector {
    let mut terms = vec![0.0; e.len()];
    let out = (0..e.dim())
        .map(|k| {
            for ((t, p), w) in terms.iter_mut().zip(e.particles()).zip(e.weights()) {
                *t = w * p[k];
            }
            pairwise_sum(&terms)
        })
        .collect();
    StateVector(out)
}

/// Crank–Nicolson style path mixing `rho * w + sqrt(1 - rho^2) * z`.
///
/// If `w` and `z` are independent standard normal vectors the result is
/// again standard normal.
pub fn mix_noise(
    w: &NoiseIncrement,
    z: &NoiseIncrement,
    rho: f64,
) -> Result<NoiseIncrement, FilterError> {
    if w.len() != z.len() {
        return Err(FilterError::InvalidInput(format!(
            "noise lengths differ: {} vs {}",
            w.len(),
            z.len()
        )));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(FilterError::InvalidInput(format!(
            "rho = {rho} outside [0, 1]"
        )));
    }
    // exact endpoints, so rho = 1 returns w bit-for-bit
    if rho == 1.0 {
        return Ok(w.clone());
    }
    if rho == 0.0 {
        return Ok(z.clone());
    }
    let c = (1.0 - rho * rho).sqrt();
    Ok(NoiseIncrement(
        w.iter().zip(z.iter()).map(|(a, b)| rho * a + c * b).collect(),
    ))
}
