//! Rotating shallow water with transport noise on an Arakawa C-grid.
//!
//! The solver works in nondimensional variables. The prognostic velocity is
//! `v = eps u + R` with `curl R = f`, so `dv/dt = eps du/dt` and
//!
//! ```text
//! dv/dt = -[eps (u.grad) u + f z x u + grad p] - [eps ((xi.grad) u + u_j grad xi^j) + f z x xi]
//! dh/dt = -div(h (u + xi))
//! p     = (h - b) / (eps F)
//! ```
//!
//! where `xi` is the per-step transport noise velocity. The `R` parts of the
//! transport operators reduce to the Coriolis terms `f z x u` and
//! `f z x xi` up to gradients of `R.u` and `R.xi`, which are dropped.

pub mod balance;
pub mod grid;
pub mod io;
pub mod scales;

use std::sync::Arc;

use crate::ensemble::{ForwardModel, NoiseIncrement, StateVector};
use crate::error::{ConfigError, ModelError};
use crate::noise_spectral::{per_step_noise, SpectralGenerator, StepNoise};

pub use grid::GridSpec;
pub use scales::SrswScales;

/// Nondimensional model parameters with precomputed row profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct SrswParams {
    pub grid: GridSpec,
    pub epsilon: f64,
    pub froude: f64,
    /// Coriolis parameter on the v1 (centre) rows and on the v2 (face) rows.
    pub f_v1: Vec<f64>,
    pub f_v2: Vec<f64>,
    /// Zonal component of `R` on the v1 rows; the meridional component is 0.
    pub r1: Vec<f64>,
    /// Bathymetry at cell centres.
    pub bathymetry: Vec<f64>,
    pub dt: f64,
}

impl SrswParams {
    /// Beta-plane `f = f0 + beta (y - Ly/2)`, flat bottom at `b = 0`, and
    /// `R1 = -(f0 s + beta s^2 / 2)` with `s = y - Ly/2`, whose discrete curl
    /// on the face rows is exactly `f`.
    pub fn beta_plane(
        grid: GridSpec,
        epsilon: f64,
        froude: f64,
        f0: f64,
        beta: f64,
        dt: f64,
    ) -> Result<Self, ConfigError> {
        grid.validate()?;
        let mid = 0.5 * grid.ly();
        let f = |y: f64| f0 + beta * (y - mid);
        let f_v1 = (0..grid.ny).map(|j| f(grid.y_centre(j))).collect();
        let f_v2 = (0..=grid.ny).map(|j| f(grid.y_face(j))).collect();
        let r1 = (0..grid.ny)
            .map(|j| {
                let s = grid.y_centre(j) - mid;
                -(f0 * s + 0.5 * beta * s * s)
            })
            .collect();
        let p = Self {
            grid,
            epsilon,
            froude,
            f_v1,
            f_v2,
            r1,
            bathymetry: vec![0.0; grid.n_centres()],
            dt,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::new("epsilon", "must be positive"));
        }
        if !(self.froude > 0.0 && self.froude.is_finite()) {
            return Err(ConfigError::new("froude", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::new("dt", "must be positive"));
        }
        if self.f_v1.len() != self.grid.ny || self.f_v2.len() != self.grid.ny + 1 || self.r1.len() != self.grid.ny {
            return Err(ConfigError::new("coriolis", "row profiles do not match the grid"));
        }
        if self.f_v1.iter().chain(&self.f_v2).any(|f| !(*f > 0.0)) {
            return Err(ConfigError::new("coriolis", "f must be positive across the band"));
        }
        if self.bathymetry.len() != self.grid.n_centres() || self.bathymetry.iter().any(|b| !b.is_finite()) {
            return Err(ConfigError::new("bathymetry", "must be finite with one value per cell"));
        }
        Ok(())
    }

    pub fn with_bathymetry(mut self, b: Vec<f64>) -> Result<Self, ConfigError> {
        self.bathymetry = b;
        self.validate()?;
        Ok(self)
    }
}

/// `p = (h - b) / (eps F)` at cell centres.
pub fn pressure(h: &[f64], b: &[f64], params: &SrswParams) -> Vec<f64> {
    let k = 1.0 / (params.epsilon * params.froude);
    h.iter().zip(b).map(|(h, b)| (h - b) * k).collect()
}

/// Borrowed view of a packed state.
#[derive(Debug, Clone, Copy)]
pub struct SrswFields<'a> {
    pub v1: &'a [f64],
    pub v2: &'a [f64],
    pub h: &'a [f64],
}

impl<'a> SrswFields<'a> {
    pub fn split(grid: &GridSpec, x: &'a [f64]) -> Self {
        let (_, o2, o3) = grid.offsets();
        assert_eq!(x.len(), grid.state_dim(), "state length does not match grid");
        Self {
            v1: &x[..o2],
            v2: &x[o2..o3],
            h: &x[o3..],
        }
    }
}

pub fn pack_state(v1: &[f64], v2: &[f64], h: &[f64]) -> StateVector {
    let mut x = Vec::with_capacity(v1.len() + v2.len() + h.len());
    x.extend_from_slice(v1);
    x.extend_from_slice(v2);
    x.extend_from_slice(h);
    StateVector(x)
}

/// Noise velocity held fixed over one step, per unit time.
#[derive(Debug, Clone, Copy)]
pub struct NoiseVelocity<'a> {
    pub xi1: &'a [f64],
    pub xi2: &'a [f64],
}

/// Precomputed neighbour indices for the periodic x direction.
fn wrap(nx: usize) -> (Vec<usize>, Vec<usize>) {
    let ip = (0..nx).map(|i| (i + 1) % nx).collect();
    let im = (0..nx).map(|i| (i + nx - 1) % nx).collect();
    (ip, im)
}

/// Writes `(dv1, dv2, dh)` for state `x` into `out` (same packing).
pub fn tendencies_into(
    params: &SrswParams,
    x: &[f64],
    noise: Option<NoiseVelocity<'_>>,
    out: &mut [f64],
) {
    let g = &params.grid;
    let (nx, ny) = (g.nx, g.ny);
    let s = SrswFields::split(g, x);
    let (_, o2, o3) = g.offsets();
    let (dv1, rest) = out.split_at_mut(o2);
    let (dv2, dh) = rest.split_at_mut(o3 - o2);
    let eps = params.epsilon;
    let inv_eps = 1.0 / eps;
    let (ip, im) = wrap(nx);
    let (rdx, rdy) = (1.0 / g.dx, 1.0 / g.dy);
    let (r2dx, r2dy) = (0.5 * rdx, 0.5 * rdy);

    let mut u1 = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            u1[k] = (s.v1[k] - params.r1[j]) * inv_eps;
        }
    }
    let u2: Vec<f64> = s.v2.iter().map(|v| v * inv_eps).collect();
    let p = pressure(s.h, &params.bathymetry, params);
    let at = |a: &[f64], i: usize, j: usize| a[j * nx + i];

    // zonal momentum on v1 points
    for j in 0..ny {
        let jp = (j + 1).min(ny - 1);
        let jm = j.saturating_sub(1);
        let f = params.f_v1[j];
        for i in 0..nx {
            let (iw, ie) = (im[i], ip[i]);
            let u = at(&u1, i, j);
            let vbar = 0.25 * (at(&u2, iw, j) + at(&u2, i, j) + at(&u2, iw, j + 1) + at(&u2, i, j + 1));
            let dudx = (at(&u1, ie, j) - at(&u1, iw, j)) * r2dx;
            let dudy = (at(&u1, i, jp) - at(&u1, i, jm)) * r2dy;
            let mut t = -eps * (u * dudx + vbar * dudy) + f * vbar - (at(&p, i, j) - at(&p, iw, j)) * rdx;
            if let Some(n) = noise {
                let x1 = at(n.xi1, i, j);
                let x2 = 0.25 * (at(n.xi2, iw, j) + at(n.xi2, i, j) + at(n.xi2, iw, j + 1) + at(n.xi2, i, j + 1));
                let dx1dx = (at(n.xi1, ie, j) - at(n.xi1, iw, j)) * r2dx;
                let dx2dx = 0.5
                    * ((at(n.xi2, i, j) - at(n.xi2, iw, j)) + (at(n.xi2, i, j + 1) - at(n.xi2, iw, j + 1)))
                    * rdx;
                let transport = x1 * dudx + x2 * dudy;
                let stretch = u * dx1dx + vbar * dx2dx;
                t += -eps * (transport + stretch) + f * x2;
            }
            dv1[j * nx + i] = t;
        }
    }

    // meridional momentum on interior v2 points; walls stay fixed
    for i in 0..nx {
        dv2[i] = 0.0;
        dv2[ny * nx + i] = 0.0;
    }
    for j in 1..ny {
        let f = params.f_v2[j];
        for i in 0..nx {
            let (iw, ie) = (im[i], ip[i]);
            let w = at(&u2, i, j);
            let ubar = 0.25 * (at(&u1, i, j - 1) + at(&u1, ie, j - 1) + at(&u1, i, j) + at(&u1, ie, j));
            let dwdx = (at(&u2, ie, j) - at(&u2, iw, j)) * r2dx;
            let dwdy = (at(&u2, i, j + 1) - at(&u2, i, j - 1)) * r2dy;
            let mut t = -eps * (ubar * dwdx + w * dwdy) - f * ubar - (at(&p, i, j) - at(&p, i, j - 1)) * rdy;
            if let Some(n) = noise {
                let x2 = at(n.xi2, i, j);
                let x1 = 0.25 * (at(n.xi1, i, j - 1) + at(n.xi1, ie, j - 1) + at(n.xi1, i, j) + at(n.xi1, ie, j));
                let dx1dy = 0.5
                    * ((at(n.xi1, i, j) - at(n.xi1, i, j - 1)) + (at(n.xi1, ie, j) - at(n.xi1, ie, j - 1)))
                    * rdy;
                let dx2dy = (at(n.xi2, i, j + 1) - at(n.xi2, i, j - 1)) * r2dy;
                let transport = x1 * dwdx + x2 * dwdy;
                let stretch = ubar * dx1dy + w * dx2dy;
                t += -eps * (transport + stretch) - f * x1;
            }
            dv2[j * nx + i] = t;
        }
    }

    // mass in flux form
    let mut fx = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let vel = u1[k] + noise.map_or(0.0, |n| n.xi1[k]);
            fx[k] = 0.5 * (at(s.h, im[i], j) + s.h[k]) * vel;
        }
    }
    let mut fy = vec![0.0; nx * (ny + 1)];
    for j in 1..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let vel = u2[k] + noise.map_or(0.0, |n| n.xi2[k]);
            fy[k] = 0.5 * (at(s.h, i, j - 1) + s.h[k]) * vel;
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            dh[k] = -((fx[j * nx + ip[i]] - fx[k]) * rdx + (fy[k + nx] - fy[k]) * rdy);
        }
    }
}

pub fn tendencies(params: &SrswParams, x: &[f64], noise: Option<NoiseVelocity<'_>>) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    tendencies_into(params, x, noise, &mut out);
    out
}

/// One classical RK4 step with the noise velocity frozen over the step.
pub fn rk4_step(params: &SrswParams, x: &[f64], noise: Option<NoiseVelocity<'_>>) -> Vec<f64> {
    let n = x.len();
    let dt = params.dt;
    let mut k = vec![0.0; n];
    let mut acc = x.to_vec();
    let mut stage = vec![0.0; n];
    tendencies_into(params, x, noise, &mut k);
    for q in 0..n {
        acc[q] += dt / 6.0 * k[q];
        stage[q] = x[q] + 0.5 * dt * k[q];
    }
    tendencies_into(params, &stage, noise, &mut k);
    for q in 0..n {
        acc[q] += dt / 3.0 * k[q];
        stage[q] = x[q] + 0.5 * dt * k[q];
    }
    tendencies_into(params, &stage, noise, &mut k);
    for q in 0..n {
        acc[q] += dt / 3.0 * k[q];
        stage[q] = x[q] + dt * k[q];
    }
    tendencies_into(params, &stage, noise, &mut k);
    for q in 0..n {
        acc[q] += dt / 6.0 * k[q];
    }
    acc
}

/// Balanced state for the centre pressure `p0`:
/// `u1 = -(1/f) dp/dy`, `u2 = (1/f) dp/dx`, `v = eps u + R`, `h = eps F p + b`.
pub fn geostrophic_init(p0: &[f64], params: &SrswParams) -> Result<StateVector, ModelError> {
    let g = &params.grid;
    if p0.len() != g.n_centres() {
        return Err(ModelError::StateLength {
            expected: g.n_centres(),
            got: p0.len(),
        });
    }
    let (mut v1, mut v2) = balance::geostrophic_velocity(g, p0, &params.f_v1, &params.f_v2, 1.0)?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            v1[k] = params.epsilon * v1[k] + params.r1[j];
        }
    }
    for v in &mut v2 {
        *v *= params.epsilon;
    }
    let ef = params.epsilon * params.froude;
    let h: Vec<f64> = p0.iter().zip(&params.bathymetry).map(|(p, b)| ef * p + b).collect();
    Ok(pack_state(&v1, &v2, &h))
}

/// Fluid velocity `u = (v - R) / eps` on both face sets.
pub fn fluid_velocity(params: &SrswParams, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = &params.grid;
    let s = SrswFields::split(g, x);
    let mut u1 = vec![0.0; g.n_v1()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            u1[k] = (s.v1[k] - params.r1[j]) / params.epsilon;
        }
    }
    let u2 = s.v2.iter().map(|v| v / params.epsilon).collect();
    (u1, u2)
}

/// Advective Courant number `max|u| dt / min(dx, dy)`.
pub fn courant_number(params: &SrswParams, x: &[f64]) -> f64 {
    let (u1, u2) = fluid_velocity(params, x);
    let umax = u1.iter().chain(&u2).fold(0.0_f64, |m, v| m.max(v.abs()));
    umax * params.dt / params.grid.dx.min(params.grid.dy)
}

/// Total mass `sum h dx dy`.
pub fn total_mass(grid: &GridSpec, x: &[f64]) -> f64 {
    let s = SrswFields::split(grid, x);
    crate::ensemble::pairwise_sum(s.h) * grid.dx * grid.dy
}

/// Spectral transport noise attached to a model.
#[derive(Debug, Clone)]
pub struct SrswNoise {
    pub generator: Arc<SpectralGenerator>,
    /// Converts the generator's amplitude units to model pressure units.
    pub unit_scale: f64,
}

/// SRSW forward model. The noise increment of one step is the vector of
/// standard normals that parameterises one spectral draw.
#[derive(Debug, Clone)]
pub struct Srsw {
    params: SrswParams,
    noise: Option<SrswNoise>,
}

impl Srsw {
    pub fn new(params: SrswParams, noise: Option<SrswNoise>) -> Result<Self, ConfigError> {
        params.validate()?;
        if let Some(n) = &noise {
            let w = n.generator.spec().window;
            if w.nx != params.grid.nx || w.ny != params.grid.ny {
                return Err(ConfigError::new("noise", "truncation window does not match the model grid"));
            }
            if !n.unit_scale.is_finite() {
                return Err(ConfigError::new("noise", "unit scale must be finite"));
            }
        }
        Ok(Self { params, noise })
    }

    pub fn params(&self) -> &SrswParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.params.grid
    }

    pub fn noise(&self) -> Option<&SrswNoise> {
        self.noise.as_ref()
    }

    /// Noise displacement increments for one stored draw.
    pub fn step_noise(&self, w: &NoiseIncrement) -> Result<Option<StepNoise>, ModelError> {
        let Some(n) = &self.noise else {
            return Ok(None);
        };
        let p = &self.params;
        per_step_noise(&n.generator, &p.grid, &p.f_v1, &p.f_v2, w, p.dt, n.unit_scale).map(Some)
    }

    fn check(&self, x: &[f64]) -> Result<(), ModelError> {
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { index });
        }
        let g = &self.params.grid;
        let (_, _, o3) = g.offsets();
        if let Some(k) = x[o3..].iter().position(|h| *h <= 0.0) {
            return Err(ModelError::Positivity {
                i: k % g.nx,
                j: k / g.nx,
                value: x[o3 + k],
            });
        }
        Ok(())
    }
}

impl ForwardModel for Srsw {
    fn state_dim(&self) -> usize {
        self.params.grid.state_dim()
    }

    fn noise_dim(&self) -> usize {
        self.noise.as_ref().map_or(0, |n| n.generator.noise_dim())
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn step(&self, state: &StateVector, noise: &NoiseIncrement) -> Result<StateVector, ModelError> {
        if state.len() != self.state_dim() {
            return Err(ModelError::StateLength {
                expected: self.state_dim(),
                got: state.len(),
            });
        }
        if noise.len() != self.noise_dim() {
            return Err(ModelError::NoiseLength {
                expected: self.noise_dim(),
                got: noise.len(),
            });
        }
        let cfl = courant_number(&self.params, state);
        if cfl > 0.5 {
            log::warn!("advective Courant number {cfl:.3} exceeds 0.5");
        }
        let next = match self.step_noise(noise)? {
            Some(sn) => {
                let inv_dt = 1.0 / self.params.dt;
                let xi1: Vec<f64> = sn.xi_v1.iter().map(|v| v * inv_dt).collect();
                let xi2: Vec<f64> = sn.xi_v2.iter().map(|v| v * inv_dt).collect();
                rk4_step(&self.params, state, Some(NoiseVelocity { xi1: &xi1, xi2: &xi2 }))
            }
            None => rk4_step(&self.params, state, None),
        };
        self.check(&next)?;
        Ok(StateVector(next))
    }
}
