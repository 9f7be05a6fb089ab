//! Stochastic Lorenz '63: a classical RK4 step followed by an additive
//! Gaussian kick `sigma_m * sqrt(dt) * W`, `W ~ N(0, I_3)`.

use serde::{Deserialize, Serialize};

use crate::ensemble::{ForwardModel, NoiseIncrement, StateVector};
use crate::error::{ConfigError, ModelError};

/// Initial condition used by the twin experiments.
pub const REFERENCE_INITIAL_STATE: [f64; 3] = [1.508870, -1.531271, 25.46091];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lorenz63Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
    /// Additive model-error scale `sigma_m`.
    pub model_error_std: f64,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            beta: 28.0,
            gamma: 8.0 / 3.0,
            dt: 0.01,
            model_error_std: 0.1,
        }
    }
}

impl Lorenz63Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new("lorenz63", format!("{name} must be positive")));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::new("lorenz63", "dt must be positive"));
        }
        if !(self.model_error_std >= 0.0 && self.model_error_std.is_finite()) {
            return Err(ConfigError::new("lorenz63", "model_error_std must be non-negative"));
        }
        Ok(())
    }

    /// Non-trivial fixed point `(sqrt(gamma (beta - 1)), sqrt(gamma (beta - 1)), beta - 1)`.
    pub fn equilibrium(&self) -> [f64; 3] {
        let c = (self.gamma * (self.beta - 1.0)).sqrt();
        [c, c, self.beta - 1.0]
    }
}

#[inline]
pub fn rhs(p: &Lorenz63Params, s: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    [p.alpha * (y - x), (p.beta - z) * x - y, x * y - p.gamma * z]
}

#[inline]
fn axpy(s: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]]
}

/// One classical fourth-order Runge–Kutta step of size `dt`.
pub fn rk4_step_with(p: &Lorenz63Params, s: [f64; 3], dt: f64) -> [f64; 3] {
    let k1 = rhs(p, s);
    let k2 = rhs(p, axpy(s, 0.5 * dt, k1));
    let k3 = rhs(p, axpy(s, 0.5 * dt, k2));
    let k4 = rhs(p, axpy(s, dt, k3));
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn as_array(x: &StateVector) -> Result<[f64; 3], ModelError> {
    if x.len() != 3 {
        return Err(ModelError::StateLength {
            expected: 3,
            got: x.len(),
        });
    }
    Ok([x[0], x[1], x[2]])
}

fn checked(out: [f64; 3]) -> Result<StateVector, ModelError> {
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite { index });
    }
    Ok(StateVector(out.to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz63 {
    pub params: Lorenz63Params,
}

impl Lorenz63 {
    pub fn new(params: Lorenz63Params) -> Result<Self, ConfigError> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn rk4_step(&self, x: &StateVector) -> Result<StateVector, ModelError> {
        checked(rk4_step_with(&self.params, as_array(x)?, self.params.dt))
    }
}

impl ForwardModel for Lorenz63 {
    fn state_dim(&self) -> usize {
        3
    }

    fn noise_dim(&self) -> usize {
        3
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn step(&self, state: &StateVector, noise: &NoiseIncrement) -> Result<StateVector, ModelError> {
        if noise.len() != 3 {
            return Err(ModelError::NoiseLength {
                expected: 3,
                got: noise.len(),
            });
        }
        let p = &self.params;
        let mut out = rk4_step_with(p, as_array(state)?, p.dt);
        if p.model_error_std != 0.0 {
            let scale = p.model_error_std * p.dt.sqrt();
            for (o, w) in out.iter_mut().zip(noise.iter()) {
                *o += scale * w;
            }
        }
        checked(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};

    /// Dormand–Prince 5(4) with error control, as an independent reference.
    fn dopri_oracle(p: &Lorenz63Params, mut s: [f64; 3], t_end: f64, tol: f64) -> [f64; 3] {
        const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
        const A: [[f64; 6]; 7] = [
            [0.0; 6],
            [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
        const B4: [f64; 7] = [
            5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0,
        ];
        let _ = C;
        let mut t = 0.0;
        let mut h = 1e-4;
        while t < t_end {
            if t + h > t_end {
                h = t_end - t;
            }
            let mut k = [[0.0; 3]; 7];
            for i in 0..7 {
                let mut si = s;
                for j in 0..i {
                    for d in 0..3 {
                        si[d] += h * A[i][j] * k[j][d];
                    }
                }
                k[i] = rhs(p, si);
            }
            let mut y5 = s;
            let mut err: f64 = 0.0;
            for d in 0..3 {
                let mut e = 0.0;
                for i in 0..7 {
                    y5[d] += h * B5[i] * k[i][d];
                    e += h * (B5[i] - B4[i]) * k[i][d];
                }
                err = err.max(e.abs());
            }
            if err <= tol {
                t += h;
                s = y5;
            }
            let fac = if err == 0.0 { 2.0 } else { 0.9 * (tol / err).powf(0.2) };
            h *= fac.clamp(0.2, 2.0);
        }
        s
    }

    fn default_model() -> Lorenz63 {
        Lorenz63::new(Lorenz63Params::default()).unwrap()
    }

    #[test]
    fn origin_is_fixed() {
        let m = default_model();
        assert_eq!(m.rk4_step(&StateVector(vec![0.0; 3])).unwrap().0, vec![0.0; 3]);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let m = default_model();
        let e = m.params.equilibrium();
        let out = m.rk4_step(&StateVector(e.to_vec())).unwrap();
        for i in 0..3 {
            assert!((out[i] - e[i]).abs() < 1e-12, "{:?} vs {:?}", out, e);
        }
    }

    #[test]
    fn one_step_matches_adaptive_oracle() {
        let p = Lorenz63Params::default();
        let s = REFERENCE_INITIAL_STATE;
        // RK4's local error at dt = 0.01 from this state is about 4.4e-7
        // (cross-checked in 30-digit arithmetic); it drops below 1e-8 at
        // dt = 0.0025.
        for (dt, tol) in [(0.01, 6e-7), (0.0025, 1e-8)] {
            let got = rk4_step_with(&p, s, dt);
            let oracle = dopri_oracle(&p, s, dt, 1e-12);
            for i in 0..3 {
                let d = (got[i] - oracle[i]).abs();
                assert!(d < tol, "dt {dt} component {i}: {} vs {} ({d:e})", got[i], oracle[i]);
            }
        }
        // known digits of the exact flow at dt = 0.01
        let exact = [1.2221798119566968, -1.4770645671434973, 24.770696672951411];
        let oracle = dopri_oracle(&p, s, 0.01, 1e-12);
        for i in 0..3 {
            assert!((oracle[i] - exact[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn observed_order_at_least_four_and_a_half() {
        let p = Lorenz63Params::default();
        let s = REFERENCE_INITIAL_STATE;
        let err = |dt: f64| {
            let a = rk4_step_with(&p, s, dt);
            let b = dopri_oracle(&p, s, dt, 1e-14);
            (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        let order = (e1 / e2).log2();
        assert!(order >= 4.5, "observed order {order} ({e1:e}, {e2:e})");
    }

    #[test]
    fn deterministic_path_stays_on_attractor() {
        let mut p = Lorenz63Params::default();
        p.model_error_std = 0.0;
        let m = Lorenz63::new(p).unwrap();
        let mut x = StateVector(REFERENCE_INITIAL_STATE.to_vec());
        let zero = NoiseIncrement::zeros(3);
        for _ in 0..500 {
            x = m.step(&x, &zero).unwrap();
            assert!(x[0].abs() < 30.0 && x[1].abs() < 30.0);
            assert!(x[2] > 0.0 && x[2] < 50.0);
        }
    }

    #[test]
    fn zero_noise_or_zero_scale_equals_rk4() {
        let m = default_model();
        let x = StateVector(REFERENCE_INITIAL_STATE.to_vec());
        assert_eq!(m.step(&x, &NoiseIncrement::zeros(3)).unwrap(), m.rk4_step(&x).unwrap());
        let mut p = Lorenz63Params::default();
        p.model_error_std = 0.0;
        let quiet = Lorenz63::new(p).unwrap();
        let w = NoiseIncrement(vec![1.0, -2.0, 0.5]);
        assert_eq!(quiet.step(&x, &w).unwrap(), m.rk4_step(&x).unwrap());
    }

    #[test]
    fn kick_variance_is_sigma_squared_dt() {
        let m = default_model();
        let x = StateVector(REFERENCE_INITIAL_STATE.to_vec());
        let base = m.rk4_step(&x).unwrap();
        let reps = 100_000;
        let mut sumsq = [0.0; 3];
        for r in 0..reps {
            let mut rng = RngStream::keyed(8, r, 0, Purpose::ModelNoise);
            let w = m.sample_noise(&mut rng);
            let y = m.step(&x, &w).unwrap();
            for k in 0..3 {
                sumsq[k] += (y[k] - base[k]).powi(2);
            }
        }
        let target = 0.1f64.powi(2) * 0.01;
        for s in sumsq {
            let v = s / reps as f64;
            assert!((v / target - 1.0).abs() < 0.03, "variance {v} vs {target}");
        }
    }

    #[test]
    fn noise_draws_are_standard_and_independent() {
        let m = default_model();
        let reps = 100_000u64;
        let (mut s, mut ss, mut cross) = (0.0, 0.0, 0.0);
        for r in 0..reps {
            let a = m.sample_noise(&mut RngStream::keyed(4, 0, r, Purpose::ModelNoise));
            let b = m.sample_noise(&mut RngStream::keyed(4, 1, r, Purpose::ModelNoise));
            s += a[0];
            ss += a[0] * a[0];
            cross += a[0] * b[0];
        }
        let n = reps as f64;
        let mean = s / n;
        let var = ss / n - mean * mean;
        assert!(mean.abs() < 3.0 / n.sqrt());
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt());
        assert!((cross / n).abs() < 0.02);

        let mut r1 = RngStream::keyed(4, 7, 7, Purpose::ModelNoise);
        let mut r2 = RngStream::keyed(4, 7, 7, Purpose::ModelNoise);
        assert_eq!(m.sample_noise(&mut r1), m.sample_noise(&mut r2));
    }

    #[test]
    fn replay_is_bit_exact() {
        let m = default_model();
        let path: Vec<NoiseIncrement> = (0..20)
            .map(|k| m.sample_noise(&mut RngStream::keyed(1, 0, k, Purpose::ModelNoise)))
            .collect();
        let x0 = StateVector(REFERENCE_INITIAL_STATE.to_vec());
        let a = m.propagate(&x0, &path).unwrap();
        let b = m.propagate(&x0, &path).unwrap();
        assert_eq!(a.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = Lorenz63Params::default();
        p.dt = 0.0;
        assert!(Lorenz63::new(p).is_err());
        p = Lorenz63Params::default();
        p.model_error_std = -1.0;
        assert!(Lorenz63::new(p).is_err());
    }
}
