//! Scalar linear-Gaussian model `x' = a x + q W`, used as a closed-form
//! reference for the filter.

use crate::ensemble::{ForwardModel, NoiseIncrement, StateVector};
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLinearModel {
    pub gain: f64,
    pub noise_std: f64,
}

impl ScalarLinearModel {
    pub fn new(gain: f64, noise_std: f64) -> Self {
        Self { gain, noise_std }
    }

    /// Gaussian forecast of `N(mean, var)` over `steps` steps.
    pub fn forecast_moments(&self, mean: f64, var: f64, steps: usize) -> (f64, f64) {
        let (mut m, mut v) = (mean, var);
        for _ in 0..steps {
            m *= self.gain;
            v = self.gain * self.gain * v + self.noise_std * self.noise_std;
        }
        (m, v)
    }
}

impl ForwardModel for ScalarLinearModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn dt(&self) -> f64 {
        1.0
    }

    fn step(&self, state: &StateVector, noise: &NoiseIncrement) -> Result<StateVector, ModelError> {
        if state.len() != 1 {
            return Err(ModelError::StateLength {
                expected: 1,
                got: state.len(),
            });
        }
        if noise.len() != 1 {
            return Err(ModelError::NoiseLength {
                expected: 1,
                got: noise.len(),
            });
        }
        let x = self.gain * state[0] + self.noise_std * noise[0];
        if !x.is_finite() {
            return Err(ModelError::NonFinite { index: 0 });
        }
        Ok(StateVector(vec![x]))
    }
}

/// Kalman update of a scalar Gaussian prior with observation `y = x + v`,
/// `v ~ N(0, r)`, tempered by `phi` (likelihood raised to `phi`).
pub fn kalman_update(prior_mean: f64, prior_var: f64, y: f64, obs_var: f64, phi: f64) -> (f64, f64) {
    let r = obs_var / phi;
    let k = prior_var / (prior_var + r);
    (prior_mean + k * (y - prior_mean), (1.0 - k) * prior_var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_affine() {
        let m = ScalarLinearModel::new(0.5, 2.0);
        let x = m
            .step(&StateVector(vec![4.0]), &NoiseIncrement(vec![0.25]))
            .unwrap();
        assert_eq!(x[0], 2.5);
        assert!(m.step(&StateVector(vec![1.0, 2.0]), &NoiseIncrement(vec![0.0])).is_err());
    }

    #[test]
    fn kalman_precision_adds() {
        let (m, v) = kalman_update(0.0, 1.0, 2.0, 1.0, 1.0);
        assert!((m - 1.0).abs() < 1e-15);
        assert!((v - 0.5).abs() < 1e-15);
        let (m2, v2) = kalman_update(0.0, 1.0, 2.0, 1.0, 0.5);
        assert!((1.0 / v2 - 1.5).abs() < 1e-12);
        assert!((m2 - 2.0 / 3.0).abs() < 1e-12);
    }
}
