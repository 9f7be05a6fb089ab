//! Discrete geostrophic balance on the C-grid.

use super::grid::GridSpec;
use crate::error::ModelError;

/// `d/dy` of a centre field at the v1 point `(i, j)`: average of the two
/// adjacent columns, centred in y, one-sided second order on the first and
/// last rows.
pub fn ddy_at_v1(g: &GridSpec, p: &[f64], i: usize, j: usize) -> f64 {
    let im = (i + g.nx - 1) % g.nx;
    let col = |c: usize| {
        let q = |r: usize| p[g.idx(c, r)];
        if j == 0 {
            (-3.0 * q(0) + 4.0 * q(1) - q(2)) / (2.0 * g.dy)
        } else if j == g.ny - 1 {
            (3.0 * q(j) - 4.0 * q(j - 1) + q(j - 2)) / (2.0 * g.dy)
        } else {
            (q(j + 1) - q(j - 1)) / (2.0 * g.dy)
        }
    };
    0.5 * (col(im) + col(i))
}

/// `d/dx` of a centre field at the interior v2 point `(i, j)`, `1 <= j < ny`:
/// centred in x, averaged over the rows either side of the face.
pub fn ddx_at_v2(g: &GridSpec, p: &[f64], i: usize, j: usize) -> f64 {
    let ip = (i + 1) % g.nx;
    let im = (i + g.nx - 1) % g.nx;
    let row = |r: usize| (p[g.idx(ip, r)] - p[g.idx(im, r)]) / (2.0 * g.dx);
    0.5 * (row(j - 1) + row(j))
}

/// Velocities in balance with the centre field `p`:
/// `u1 = -(gamma / f) dp/dy`, `u2 = (gamma / f) dp/dx`, `u2 = 0` on the walls.
///
/// `f_v1` holds f on the v1 rows (`ny` values), `f_v2` on the v2 rows
/// (`ny + 1` values).
pub fn geostrophic_velocity(
    g: &GridSpec,
    p: &[f64],
    f_v1: &[f64],
    f_v2: &[f64],
    gamma: f64,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    assert_eq!(p.len(), g.n_centres());
    assert_eq!(f_v1.len(), g.ny);
    assert_eq!(f_v2.len(), g.ny + 1);
    if let Some(j) = f_v1.iter().position(|f| *f == 0.0) {
        return Err(ModelError::SingularBalance { y: g.y_centre(j) });
    }
    if let Some(j) = f_v2[1..g.ny].iter().position(|f| *f == 0.0) {
        return Err(ModelError::SingularBalance { y: g.y_face(j + 1) });
    }
    let mut u1 = vec![0.0; g.n_v1()];
    let mut u2 = vec![0.0; g.n_v2()];
    for j in 0..g.ny {
        let c = -gamma / f_v1[j];
        for i in 0..g.nx {
            u1[g.idx(i, j)] = c * ddy_at_v1(g, p, i, j);
        }
    }
    for j in 1..g.ny {
        let c = gamma / f_v2[j];
        for i in 0..g.nx {
            u2[g.idx(i, j)] = c * ddx_at_v2(g, p, i, j);
        }
    }
    Ok((u1, u2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_gives_rest() {
        let g = GridSpec::new(16, 8, 0.1, 0.1).unwrap();
        let p = vec![3.0; g.n_centres()];
        let (u1, u2) = geostrophic_velocity(&g, &p, &[1.0; 8], &[1.0; 9], 1.0).unwrap();
        assert!(u1.iter().chain(&u2).all(|v| *v == 0.0));
    }

    #[test]
    fn zero_coriolis_is_singular() {
        let g = GridSpec::new(16, 8, 0.1, 0.1).unwrap();
        let p = vec![0.0; g.n_centres()];
        let mut f = [1.0; 8];
        f[3] = 0.0;
        assert!(matches!(
            geostrophic_velocity(&g, &p, &f, &[1.0; 9], 1.0),
            Err(ModelError::SingularBalance { .. })
        ));
    }

    fn max_err_sin_y(ny: usize) -> f64 {
        let ly = 1.0;
        let g = GridSpec::new(16, ny, 1.0 / 16.0, ly / ny as f64).unwrap();
        let mut p = vec![0.0; g.n_centres()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                p[g.idx(i, j)] = (2.0 * PI * g.y_centre(j) / ly).sin();
            }
        }
        let f = 1.3;
        let (u1, u2) = geostrophic_velocity(&g, &p, &vec![f; ny], &vec![f; ny + 1], 1.0).unwrap();
        assert!(u2.iter().all(|v| v.abs() < 1e-12));
        let mut err: f64 = 0.0;
        for j in 0..g.ny {
            let exact = -(2.0 * PI / (f * ly)) * (2.0 * PI * g.y_centre(j) / ly).cos();
            for i in 0..g.nx {
                err = err.max((u1[g.idx(i, j)] - exact).abs());
            }
        }
        err
    }

    #[test]
    fn balance_converges_at_second_order() {
        let (e1, e2) = (max_err_sin_y(32), max_err_sin_y(64));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "order {order}");
    }
}
