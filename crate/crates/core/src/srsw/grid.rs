use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Staggered C-grid on a channel that is periodic in x and walled in y.
///
/// Lengths are in model (nondimensional) units. Layout, all row-major with
/// `i` fastest:
/// - `h` at cell centres `((i + 1/2) dx, (j + 1/2) dy)`, `nx * ny` values;
/// - `v1` at west faces `(i dx, (j + 1/2) dy)`, `nx * ny` values;
/// - `v2` at south faces `((i + 1/2) dx, j dy)`, `nx * (ny + 1)` values, rows
///   `0` and `ny` lie on the walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self, ConfigError> {
        let g = Self { nx, ny, dx, dy };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nx < 8 || self.ny < 8 {
            return Err(ConfigError::new("grid", format!("need at least 8x8 cells, got {}x{}", self.nx, self.ny)));
        }
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return Err(ConfigError::new("grid", "spacing must be positive"));
        }
        Ok(())
    }

    pub fn n_centres(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_v1(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_v2(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn state_dim(&self) -> usize {
        self.n_v1() + self.n_v2() + self.n_centres()
    }

    pub fn lx(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn ly(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// y coordinate of centre row `j` (also the v1 rows).
    pub fn y_centre(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    /// y coordinate of face row `j` (the v2 rows).
    pub fn y_face(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    pub fn x_centre(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn x_face(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// Offsets of the v1, v2 and h blocks inside a packed state vector.
    pub fn offsets(&self) -> (usize, usize, usize) {
        let a = self.n_v1();
        (0, a, a + self.n_v2())
    }
}
