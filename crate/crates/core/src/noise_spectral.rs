//! Spatially correlated Gaussian random fields built in spectral space with
//! random phases, truncated from a larger periodic grid, and the
//! geostrophically balanced velocity fields derived from them.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::rng::RngStream;
use crate::srsw::balance::geostrophic_velocity;
use crate::srsw::grid::GridSpec;

/// Placement of the physical grid inside the extended periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationWindow {
    pub offset_x: usize,
    pub offset_y: usize,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralNoiseSpec {
    /// Extended grid size in x and y.
    pub n: usize,
    pub m: usize,
    pub dx: f64,
    pub dy: f64,
    /// Width of the Gaussian spectrum `exp(-|mu|^2 / sigma^2)`, with `mu`
    /// the angular wavenumber.
    pub sigma: f64,
    /// Pointwise standard deviation of the truncated field.
    pub amplitude: f64,
    pub window: TruncationWindow,
    /// Constant in `Rv1 = -(gamma / f) dRp/dy`, `Rv2 = (gamma / f) dRp/dx`.
    pub balance: f64,
}

impl SpectralNoiseSpec {
    /// Extended grid of `factor_x * nx` by `factor_y * ny` rounded up to
    /// powers of two, with the physical grid centred inside it.
    #[allow(clippy::too_many_arguments)]
    pub fn extended(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        factor_x: usize,
        factor_y: usize,
        sigma: f64,
        amplitude: f64,
        balance: f64,
    ) -> Result<Self, ConfigError> {
        let n = (factor_x.max(1) * nx).next_power_of_two();
        let m = (factor_y.max(1) * ny).next_power_of_two();
        let s = Self {
            n,
            m,
            dx,
            dy,
            sigma,
            amplitude,
            window: TruncationWindow {
                offset_x: (n - nx) / 2,
                offset_y: (m - ny) / 2,
                nx,
                ny,
            },
            balance,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.n.is_power_of_two() || !self.m.is_power_of_two() {
            return Err(ConfigError::new("noise", "extended grid sides must be powers of two"));
        }
        let w = &self.window;
        if w.nx == 0 || w.ny == 0 || w.offset_x + w.nx > self.n || w.offset_y + w.ny > self.m {
            return Err(ConfigError::new("noise", "truncation window does not fit the extended grid"));
        }
        if w.nx == self.n && w.ny == self.m {
            return Err(ConfigError::new("noise", "extended grid must be larger than the physical grid"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ConfigError::new("noise", "sigma must be positive"));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(ConfigError::new("noise", "amplitude must be positive"));
        }
        if !(self.dx > 0.0 && self.dy > 0.0) {
            return Err(ConfigError::new("noise", "spacing must be positive"));
        }
        if !self.balance.is_finite() {
            return Err(ConfigError::new("noise", "balance constant must be finite"));
        }
        Ok(())
    }

    /// Distance at which the field correlation falls to `1/e`.
    pub fn correlation_length(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 / self.sigma
    }

    /// Angular wavenumbers of extended-grid index `(kx, ky)`.
    pub fn wavenumber(&self, kx: usize, ky: usize) -> (f64, f64) {
        let signed = |k: usize, n: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let tau = 2.0 * std::f64::consts::PI;
        (
            tau * signed(kx, self.n) / (self.n as f64 * self.dx),
            tau * signed(ky, self.m) / (self.m as f64 * self.dy),
        )
    }

    pub fn spectrum(&self, kx: usize, ky: usize) -> f64 {
        let (a, b) = self.wavenumber(kx, ky);
        (-(a * a + b * b) / (self.sigma * self.sigma)).exp()
    }
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    index: usize,
    conj: usize,
    amp: f64,
}

/// Sampler for one [`SpectralNoiseSpec`]; cheap to share across threads.
///
/// A draw is parameterised by two standard normals `(a, b)` per canonical
/// mode (one of each conjugate pair). The phase is the angle of `a + i b`,
/// which is uniform, and the mode coefficient is `A e^{i theta}` with its
/// conjugate at the mirrored wavenumber. Self-conjugate modes get the real
/// coefficient `sqrt(2) A cos(theta)` so that every mode contributes `A^2`
/// to the pointwise variance. Keeping Gaussian coordinates rather than
/// angles means the jitter proposal `rho W + sqrt(1 - rho^2) Z` leaves the
/// phase law invariant.
pub struct SpectralGenerator {
    spec: SpectralNoiseSpec,
    modes: Vec<Mode>,
    scale: f64,
    fft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGenerator")
            .field("spec", &self.spec)
            .field("modes", &self.modes.len())
            .finish()
    }
}

impl SpectralGenerator {
    pub fn new(spec: SpectralNoiseSpec) -> Result<Self, ConfigError> {
        spec.validate()?;
        let (n, m) = (spec.n, spec.m);
        let mut modes = Vec::with_capacity(n * m / 2 + 2);
        let mut total = 0.0;
        for ky in 0..m {
            for kx in 0..n {
                let index = ky * n + kx;
                let conj = ((m - ky) % m) * n + (n - kx) % n;
                let amp = spec.spectrum(kx, ky);
                total += amp * amp;
                if index <= conj {
                    modes.push(Mode { index, conj, amp });
                }
            }
        }
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_inverse(n);
        let fft_y = planner.plan_fft_inverse(m);
        Ok(Self {
            scale: spec.amplitude / total.sqrt(),
            spec,
            modes,
            fft_x,
            fft_y,
        })
    }

    pub fn spec(&self) -> &SpectralNoiseSpec {
        &self.spec
    }

    /// Number of standard normals consumed by one draw.
    pub fn noise_dim(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Factor applied to the raw transform so the pointwise std equals the
    /// configured amplitude.
    pub fn rescale_factor(&self) -> f64 {
        self.scale
    }

    /// Unit phasors `(cos theta, sin theta)` per canonical mode.
    pub fn phasors_from_normals(&self, normals: &[f64]) -> Vec<(f64, f64)> {
        assert_eq!(normals.len(), self.noise_dim());
        normals
            .chunks_exact(2)
            .map(|ab| {
                let r = ab[0].hypot(ab[1]);
                if r > 0.0 {
                    (ab[0] / r, ab[1] / r)
                } else {
                    (1.0, 0.0)
                }
            })
            .collect()
    }

    fn coefficients(&self, phasors: &[(f64, f64)]) -> Vec<Complex64> {
        assert_eq!(phasors.len(), self.modes.len());
        let mut c = vec![Complex64::new(0.0, 0.0); self.spec.n * self.spec.m];
        for (mode, &(co, si)) in self.modes.iter().zip(phasors) {
            if mode.index == mode.conj {
                c[mode.index] = Complex64::new(std::f64::consts::SQRT_2 * mode.amp * co, 0.0);
            } else {
                c[mode.index] = Complex64::new(mode.amp * co, mode.amp * si);
                c[mode.conj] = Complex64::new(mode.amp * co, -mode.amp * si);
            }
        }
        c
    }

    /// Unnormalised inverse 2-D transform. The result is column-major:
    /// entry `x * m + y`.
    fn inverse_transform(&self, mut c: Vec<Complex64>) -> Vec<Complex64> {
        let (n, m) = (self.spec.n, self.spec.m);
        self.fft_x.process(&mut c);
        let mut t = vec![Complex64::new(0.0, 0.0); n * m];
        for y in 0..m {
            for x in 0..n {
                t[x * m + y] = c[y * n + x];
            }
        }
        self.fft_y.process(&mut t);
        t
    }

    /// Complex field on the whole extended grid, row-major `y * n + x`,
    /// before truncation and without rescaling.
    pub fn extended_complex_from_phases(&self, phases: &[f64]) -> Vec<Complex64> {
        let p: Vec<(f64, f64)> = phases.iter().map(|t| (t.cos(), t.sin())).collect();
        let t = self.inverse_transform(self.coefficients(&p));
        let (n, m) = (self.spec.n, self.spec.m);
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for y in 0..m {
            for x in 0..n {
                out[y * n + x] = t[x * m + y];
            }
        }
        out
    }

    fn window(&self, t: &[Complex64], factor: f64) -> Vec<f64> {
        let w = &self.spec.window;
        let m = self.spec.m;
        let mut out = vec![0.0; w.nx * w.ny];
        for j in 0..w.ny {
            for i in 0..w.nx {
                out[j * w.nx + i] = factor * t[(w.offset_x + i) * m + w.offset_y + j].re;
            }
        }
        out
    }

    /// Field on the physical window for explicit phases (radians, one per
    /// canonical mode).
    pub fn field_from_phases(&self, phases: &[f64], rescale: bool) -> Vec<f64> {
        let p: Vec<(f64, f64)> = phases.iter().map(|t| (t.cos(), t.sin())).collect();
        let t = self.inverse_transform(self.coefficients(&p));
        self.window(&t, if rescale { self.scale } else { 1.0 })
    }

    /// Field on the physical window with pointwise std equal to the
    /// configured amplitude.
    pub fn field_from_normals(&self, normals: &[f64]) -> Vec<f64> {
        let t = self.inverse_transform(self.coefficients(&self.phasors_from_normals(normals)));
        self.window(&t, self.scale)
    }

    pub fn sample_scalar_field(&self, rng: &mut RngStream) -> Vec<f64> {
        self.field_from_normals(&rng.normals(self.noise_dim()))
    }

    /// Covariance of the rescaled field between two points separated by
    /// `(lx, ly)` grid cells: `scale^2 sum_k A_k^2 cos(mu_k . r)`.
    pub fn covariance(&self, lx: isize, ly: isize) -> f64 {
        let (n, m) = (self.spec.n as isize, self.spec.m as isize);
        let tau = 2.0 * std::f64::consts::PI;
        let mut s = 0.0;
        for ky in 0..m {
            for kx in 0..n {
                let a = self.spec.spectrum(kx as usize, ky as usize);
                let ph = tau * ((kx * lx).rem_euclid(n) as f64 / n as f64 + (ky * ly).rem_euclid(m) as f64 / m as f64);
                s += a * a * ph.cos();
            }
        }
        self.scale * self.scale * s
    }
}

/// Velocity fields in geostrophic balance with `rp` (centre field on the
/// physical grid), using the balance constant of `spec`.
pub fn balanced_velocity_fields(
    rp: &[f64],
    spec: &SpectralNoiseSpec,
    grid: &GridSpec,
    f_v1: &[f64],
    f_v2: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    geostrophic_velocity(grid, rp, f_v1, f_v2, spec.balance)
}

/// Transport noise for one solver step: displacement increments
/// `R^v * Delta W` on the velocity points and their divergence at centres.
#[derive(Debug, Clone, PartialEq)]
pub struct StepNoise {
    pub xi_v1: Vec<f64>,
    pub xi_v2: Vec<f64>,
    pub xi_stretch: Vec<f64>,
}

/// Builds one step's noise from stored normals.
///
/// `unit_scale` converts the generator's amplitude units to the model's
/// pressure units before balancing.
pub fn per_step_noise(
    gen: &SpectralGenerator,
    grid: &GridSpec,
    f_v1: &[f64],
    f_v2: &[f64],
    normals: &[f64],
    dt: f64,
    unit_scale: f64,
) -> Result<StepNoise, ModelError> {
    let mut rp = gen.field_from_normals(normals);
    let k = unit_scale * dt.sqrt();
    for v in &mut rp {
        *v *= k;
    }
    let (xi_v1, xi_v2) = balanced_velocity_fields(&rp, gen.spec(), grid, f_v1, f_v2)?;
    let mut xi_stretch = vec![0.0; grid.n_centres()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let ip = (i + 1) % grid.nx;
            xi_stretch[grid.idx(i, j)] = (xi_v1[grid.idx(ip, j)] - xi_v1[grid.idx(i, j)]) / grid.dx
                + (xi_v2[grid.idx(i, j + 1)] - xi_v2[grid.idx(i, j)]) / grid.dy;
        }
    }
    Ok(StepNoise {
        xi_v1,
        xi_v2,
        xi_stretch,
    })
}

/// Draws normals from `rng` and builds one step's noise.
pub fn sample_step_noise(
    gen: &SpectralGenerator,
    grid: &GridSpec,
    f_v1: &[f64],
    f_v2: &[f64],
    rng: &mut RngStream,
    dt: f64,
    unit_scale: f64,
) -> Result<StepNoise, ModelError> {
    per_step_noise(gen, grid, f_v1, f_v2, &rng.normals(gen.noise_dim()), dt, unit_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;
    use std::f64::consts::PI;

    fn small_spec() -> SpectralNoiseSpec {
        SpectralNoiseSpec::extended(8, 8, 0.25, 0.25, 2, 2, 3.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        let s = small_spec();
        assert_eq!((s.n, s.m), (16, 16));
        assert_eq!((s.window.offset_x, s.window.offset_y), (4, 4));
        let mut bad = s.clone();
        bad.n = 12;
        assert!(bad.validate().is_err());
        let mut bad = s.clone();
        bad.sigma = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = s.clone();
        bad.window.offset_x = 10;
        assert!(bad.validate().is_err());
        assert!(SpectralNoiseSpec::extended(8, 8, 0.25, 0.25, 1, 1, 3.0, 1.0, 1.0).is_err());
        // periodic direction may be left unextended
        assert!(SpectralNoiseSpec::extended(8, 8, 0.25, 0.25, 1, 2, 3.0, 1.0, 1.0).is_ok());
    }

    /// Direct double-loop inverse DFT of the coefficient array used for
    /// zero phases: `A` on paired modes, `sqrt(2) A` on self-conjugate ones.
    fn dft_oracle(spec: &SpectralNoiseSpec) -> Vec<f64> {
        let (n, m) = (spec.n, spec.m);
        let w = spec.window;
        let mut out = vec![0.0; w.nx * w.ny];
        for j in 0..w.ny {
            for i in 0..w.nx {
                let (x, y) = ((w.offset_x + i) as f64, (w.offset_y + j) as f64);
                let mut s = 0.0;
                for ky in 0..m {
                    for kx in 0..n {
                        let self_conj = (n - kx) % n == kx && (m - ky) % m == ky;
                        let c = spec.spectrum(kx, ky) * if self_conj { 2f64.sqrt() } else { 1.0 };
                        s += c * (2.0 * PI * (kx as f64 * x / n as f64 + ky as f64 * y / m as f64)).cos();
                    }
                }
                out[j * w.nx + i] = s;
            }
        }
        out
    }

    #[test]
    fn zero_phases_match_direct_dft() {
        let spec = small_spec();
        let gen = SpectralGenerator::new(spec.clone()).unwrap();
        let got = gen.field_from_phases(&vec![0.0; gen.n_modes()], false);
        let want = dft_oracle(&spec);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn transform_is_real() {
        let gen = SpectralGenerator::new(small_spec()).unwrap();
        let mut rng = RngStream::keyed(5, 0, 0, Purpose::User(1));
        let phases: Vec<f64> = (0..gen.n_modes()).map(|_| 2.0 * PI * rng.uniform()).collect();
        let c = gen.extended_complex_from_phases(&phases);
        let mag = c.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let im = c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(im < 1e-12 * mag, "{im} vs {mag}");
    }

    #[test]
    fn replay_is_bit_exact() {
        let gen = SpectralGenerator::new(small_spec()).unwrap();
        let a = gen.sample_scalar_field(&mut RngStream::keyed(9, 3, 4, Purpose::ModelNoise));
        let b = gen.sample_scalar_field(&mut RngStream::keyed(9, 3, 4, Purpose::ModelNoise));
        assert_eq!(a, b);
        let c = gen.sample_scalar_field(&mut RngStream::keyed(9, 3, 5, Purpose::ModelNoise));
        assert_ne!(a, c);
    }

    #[test]
    fn variance_normalisation_matches_covariance_at_zero_lag() {
        let gen = SpectralGenerator::new(small_spec()).unwrap();
        assert!((gen.covariance(0, 0) - 1.0).abs() < 1e-12);
        // covariance decays with separation
        assert!(gen.covariance(3, 0) < gen.covariance(1, 0));
    }

    #[test]
    fn narrow_spectrum_gives_long_correlation() {
        let spec = SpectralNoiseSpec::extended(8, 8, 0.25, 0.25, 2, 2, 0.05, 1.0, 1.0).unwrap();
        let gen = SpectralGenerator::new(spec).unwrap();
        // only the constant mode survives: the window is one correlated blob
        assert!(gen.covariance(7, 7) > 0.99);
    }

    #[test]
    fn step_noise_scales_with_root_dt() {
        let gen = SpectralGenerator::new(small_spec()).unwrap();
        let g = GridSpec::new(8, 8, 0.25, 0.25).unwrap();
        let (f1, f2) = (vec![1.0; 8], vec![1.0; 9]);
        let z = RngStream::keyed(1, 0, 0, Purpose::ModelNoise).normals(gen.noise_dim());
        let a = per_step_noise(&gen, &g, &f1, &f2, &z, 0.01, 1.0).unwrap();
        let b = per_step_noise(&gen, &g, &f1, &f2, &z, 0.04, 1.0).unwrap();
        for (x, y) in a.xi_v1.iter().zip(&b.xi_v1).chain(a.xi_v2.iter().zip(&b.xi_v2)) {
            assert!((2.0 * x - y).abs() <= 1e-14 * y.abs().max(1e-300));
        }
        // walls carry no normal noise velocity
        for i in 0..8 {
            assert_eq!(a.xi_v2[g.idx(i, 0)], 0.0);
            assert_eq!(a.xi_v2[g.idx(i, 8)], 0.0);
        }
    }

    #[test]
    fn balanced_fields_of_constant_are_zero() {
        let spec = small_spec();
        let g = GridSpec::new(8, 8, 0.25, 0.25).unwrap();
        let (a, b) = balanced_velocity_fields(&[2.0; 64], &spec, &g, &[1.0; 8], &[1.0; 9]).unwrap();
        assert!(a.iter().chain(&b).all(|v| *v == 0.0));
    }

    fn sin_x_error(nx: usize) -> f64 {
        let lx = 2.0;
        let g = GridSpec::new(nx, 8, lx / nx as f64, 0.25).unwrap();
        let mut spec = small_spec();
        spec.balance = 0.7;
        let f = 1.4;
        let mut rp = vec![0.0; g.n_centres()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                rp[g.idx(i, j)] = (2.0 * PI * g.x_centre(i) / lx).sin();
            }
        }
        let (v1, v2) = balanced_velocity_fields(&rp, &spec, &g, &vec![f; 8], &vec![f; 9]).unwrap();
        assert!(v1.iter().all(|v| v.abs() < 1e-12));
        let mut err: f64 = 0.0;
        for j in 1..g.ny {
            for i in 0..g.nx {
                let exact = 0.7 * 2.0 * PI / (f * lx) * (2.0 * PI * g.x_centre(i) / lx).cos();
                err = err.max((v2[g.idx(i, j)] - exact).abs());
            }
        }
        err
    }

    #[test]
    fn balanced_velocity_second_order() {
        let order = (sin_x_error(16) / sin_x_error(32)).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn balance_residual_is_exact() {
        let gen = SpectralGenerator::new(small_spec()).unwrap();
        let g = GridSpec::new(8, 8, 0.25, 0.25).unwrap();
        let rp = gen.sample_scalar_field(&mut RngStream::keyed(2, 0, 0, Purpose::User(0)));
        let f: Vec<f64> = (0..8).map(|j| 1.0 + 0.1 * j as f64).collect();
        let (v1, _) = balanced_velocity_fields(&rp, gen.spec(), &g, &f, &[1.0; 9]).unwrap();
        for j in 1..7 {
            for i in 0..8 {
                let d = crate::srsw::balance::ddy_at_v1(&g, &rp, i, j);
                let r = f[j] * v1[g.idx(i, j)] + gen.spec().balance * d;
                assert!(r.abs() < 1e-14, "{r}");
            }
        }
    }
}
