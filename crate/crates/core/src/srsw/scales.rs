use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::SrswParams;
use crate::error::ConfigError;

/// Dimensional constants that fix the nondimensionalisation.
///
/// Lengths scale with `length_m`, velocities with `velocity_ms`, time with
/// `length_m / velocity_ms`, Coriolis with `f0`, depth with `depth_m`.
/// Then `eps = U / (f0 L)` and `F = f0^2 L^2 / (g H)`, and a height
/// anomaly of `d` metres is a pressure anomaly of `d / (H eps F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrswScales {
    pub length_m: f64,
    pub velocity_ms: f64,
    pub depth_m: f64,
    pub gravity: f64,
    /// Earth rotation rate (1/s).
    pub omega: f64,
    pub earth_radius_m: f64,
    /// Latitude band of the channel (degrees north).
    pub lat_south: f64,
    pub lat_north: f64,
}

impl Default for SrswScales {
    fn default() -> Self {
        Self {
            length_m: 1.0e6,
            velocity_ms: 10.0,
            depth_m: 1.0e4,
            gravity: 9.81,
            omega: 7.292e-5,
            earth_radius_m: 6.371e6,
            lat_south: 30.0,
            lat_north: 60.0,
        }
    }
}

impl SrswScales {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = [
            ("length_m", self.length_m),
            ("velocity_ms", self.velocity_ms),
            ("depth_m", self.depth_m),
            ("gravity", self.gravity),
            ("omega", self.omega),
            ("earth_radius_m", self.earth_radius_m),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new("scales", format!("{name} must be positive")));
            }
        }
        if !(self.lat_south < self.lat_north && self.lat_south > 0.0 && self.lat_north < 90.0) {
            return Err(ConfigError::new("scales", "latitude band must lie in the northern hemisphere"));
        }
        Ok(())
    }

    fn mid_lat(&self) -> f64 {
        (0.5 * (self.lat_south + self.lat_north)).to_radians()
    }

    /// Coriolis parameter at the band centre (1/s).
    pub fn f0(&self) -> f64 {
        2.0 * self.omega * self.mid_lat().sin()
    }

    /// Meridional Coriolis gradient at the band centre (1/(m s)).
    pub fn beta(&self) -> f64 {
        2.0 * self.omega * self.mid_lat().cos() / self.earth_radius_m
    }

    pub fn epsilon(&self) -> f64 {
        self.velocity_ms / (self.f0() * self.length_m)
    }

    pub fn froude(&self) -> f64 {
        let f0l = self.f0() * self.length_m;
        f0l * f0l / (self.gravity * self.depth_m)
    }

    pub fn time_s(&self) -> f64 {
        self.length_m / self.velocity_ms
    }

    /// Channel width (m).
    pub fn band_width_m(&self) -> f64 {
        self.earth_radius_m * (self.lat_north - self.lat_south).to_radians()
    }

    /// Height in metres to model `h`.
    pub fn height_from_m(&self, metres: f64) -> f64 {
        metres / self.depth_m
    }

    pub fn height_to_m(&self, h: f64) -> f64 {
        h * self.depth_m
    }

    /// Pressure units per metre of height anomaly.
    pub fn pressure_per_metre(&self) -> f64 {
        1.0 / (self.depth_m * self.epsilon() * self.froude())
    }

    /// Square cells spanning the band with `ny` rows, `nx` columns.
    pub fn grid(&self, nx: usize, ny: usize) -> Result<GridSpec, ConfigError> {
        let d = self.band_width_m() / self.length_m / ny as f64;
        GridSpec::new(nx, ny, d, d)
    }

    /// Beta-plane parameters for a time step of `dt_s` seconds.
    pub fn params(&self, nx: usize, ny: usize, dt_s: f64) -> Result<SrswParams, ConfigError> {
        self.validate()?;
        if !(dt_s > 0.0) {
            return Err(ConfigError::new("dt", "must be positive"));
        }
        let grid = self.grid(nx, ny)?;
        let beta = self.beta() * self.length_m / self.f0();
        SrswParams::beta_plane(grid, self.epsilon(), self.froude(), 1.0, beta, dt_s / self.time_s())
    }
}
