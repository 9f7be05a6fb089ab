use crate::ensemble::{check_normalized, pairwise_sum};
use crate::error::FilterError;

use super::FilterConfig;

/// Temperatures live on a dyadic grid of this spacing. Every cumulative
/// temperature and every increment is an exact multiple of it, so partial
/// sums of increments are exact in `f64` and the schedule telescopes to 1
/// with no rounding.
pub const PHI_QUANTUM: f64 = 1.0 / (1u64 << 48) as f64;

const MAX_BISECTION_ITERS: usize = 200;

/// Effective sample size `1 / sum(w^2)` of normalized weights.
pub fn ess(weights: &[f64]) -> Result<f64, FilterError> {
    check_normalized(weights)?;
    Ok(ess_unchecked(weights))
}

pub(crate) fn ess_unchecked(weights: &[f64]) -> f64 {
    let sq: Vec<f64> = weights.iter().map(|w| w * w).collect();
    1.0 / pairwise_sum(&sq)
}

/// Normalized weights proportional to `exp(delta_phi * log_lik)`.
///
/// Entries equal to `-inf` get zero weight. Normalization goes through the
/// log-sum-exp shift, so arbitrarily negative log-likelihoods are fine.
pub fn tempered_weights(log_lik: &[f64], delta_phi: f64) -> Result<Vec<f64>, FilterError> {
    if !(delta_phi > 0.0 && delta_phi <= 1.0) {
        return Err(FilterError::InvalidInput(format!(
            "temperature increment {delta_phi} outside (0, 1]"
        )));
    }
    if let Some(v) = log_lik.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(FilterError::InvalidInput(format!("log-likelihood {v}")));
    }
    let max = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(FilterError::DegenerateLikelihood);
    }
    let unnorm: Vec<f64> = log_lik
        .iter()
        .map(|l| (delta_phi * (l - max)).exp())
        .collect();
    let total = pairwise_sum(&unnorm);
    Ok(unnorm.into_iter().map(|w| w / total).collect())
}

fn quantize_down(x: f64) -> f64 {
    (x / PHI_QUANTUM).floor() * PHI_QUANTUM
}

/// Largest admissible temperature increment from `phi_done`.
///
/// Returns the whole remainder `1 - phi_done` when its tempered weights keep
/// the ESS at or above the threshold. Otherwise bisects on the increment,
/// relying on ESS being non-increasing in it, until the ESS is within
/// `bisection_tol` of the threshold. The returned increment is rounded down
/// onto the [`PHI_QUANTUM`] grid, which can only raise the ESS.
pub fn find_temperature(
    log_lik: &[f64],
    phi_done: f64,
    cfg: &FilterConfig,
) -> Result<f64, FilterError> {
    if !(0.0..1.0).contains(&phi_done) {
        return Err(FilterError::InvalidInput(format!(
            "completed temperature {phi_done} outside [0, 1)"
        )));
    }
    let remainder = 1.0 - phi_done;
    let threshold = cfg.ess_threshold;
    let ess_at = |dphi: f64| -> Result<f64, FilterError> {
        Ok(ess_unchecked(&tempered_weights(log_lik, dphi)?))
    };

    if ess_at(remainder)? >= threshold {
        return Ok(remainder);
    }

    let (mut lo, mut hi) = (0.0_f64, remainder);
    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo < PHI_QUANTUM {
            return Ok(quantize_down(lo).max(PHI_QUANTUM));
        }
        let mid = 0.5 * (lo + hi);
        let e = ess_at(mid)?;
        if (e - threshold).abs() <= cfg.bisection_tol {
            let q = quantize_down(mid);
            if q > 0.0 {
                return Ok(q);
            }
        }
        if e >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(FilterError::BisectionFailed {
        iters: MAX_BISECTION_ITERS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};
    use proptest::prelude::*;

    fn cfg(n: usize, threshold: f64, tol: f64) -> FilterConfig {
        FilterConfig {
            n_particles: n,
            ess_threshold: threshold,
            bisection_tol: tol,
            ..FilterConfig::with_particles(n)
        }
    }

    #[test]
    fn ess_closed_forms() {
        assert!((ess(&[0.02; 50]).unwrap() - 50.0).abs() < 1e-9);
        let mut w = vec![0.0; 50];
        w[0] = 1.0;
        assert_eq!(ess(&w).unwrap(), 1.0);
        w[0] = 0.5;
        w[1] = 0.5;
        assert_eq!(ess(&w).unwrap(), 2.0);
        assert!(ess(&[0.6, 0.6]).is_err());
    }

    #[test]
    fn tempered_two_point() {
        let w = tempered_weights(&[0.0, -1.0], 0.5).unwrap();
        assert!((w[0] - 0.6225).abs() < 1e-4);
        assert!((w[1] - 0.3775).abs() < 1e-4);
    }

    #[test]
    fn tempered_equal_logliks_uniform() {
        let w = tempered_weights(&[-3.0; 7], 0.3).unwrap();
        for v in w {
            assert!((v - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tempered_matches_direct_exponentiation() {
        let mut rng = RngStream::keyed(11, 0, 0, Purpose::User(3));
        let ll: Vec<f64> = (0..6).map(|_| -5.0 * rng.uniform()).collect();
        let direct: Vec<f64> = ll.iter().map(|l| l.exp()).collect();
        let total: f64 = direct.iter().sum();
        let w = tempered_weights(&ll, 1.0).unwrap();
        for (a, b) in w.iter().zip(&direct) {
            assert!((a - b / total).abs() < 1e-12);
        }
    }

    #[test]
    fn tempered_handles_extreme_logliks() {
        let w = tempered_weights(&[-1e6, -1e6 - 1.0, f64::NEG_INFINITY], 1.0).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(w[2], 0.0);
        assert!(matches!(
            tempered_weights(&[f64::NEG_INFINITY; 3], 0.5),
            Err(FilterError::DegenerateLikelihood)
        ));
        assert!(tempered_weights(&[0.0, 0.0], 0.0).is_err());
        assert!(tempered_weights(&[0.0, f64::NAN], 0.5).is_err());
    }

    #[test]
    fn full_step_when_flat() {
        let d = find_temperature(&[-2.0; 10], 0.0, &cfg(10, 5.0, 0.1)).unwrap();
        assert_eq!(d, 1.0);
    }

    /// Smallest grid point where the ESS drops to the threshold.
    fn grid_scan(ll: &[f64], threshold: f64, step: f64) -> f64 {
        let mut d = step;
        while d <= 1.0 {
            if ess(&tempered_weights(ll, d).unwrap()).unwrap() <= threshold {
                return d;
            }
            d += step;
        }
        1.0
    }

    #[test]
    fn bisection_two_particles_matches_grid_scan() {
        let ll = [0.0, -20.0];
        let d = find_temperature(&ll, 0.0, &cfg(2, 1.5, 1e-10)).unwrap();
        let oracle = grid_scan(&ll, 1.5, 1e-6);
        assert!((d - oracle).abs() <= 2e-6, "{d} vs {oracle}");
        let e = ess(&tempered_weights(&ll, d).unwrap()).unwrap();
        assert!((e - 1.5).abs() < 1e-6);
    }

    #[test]
    fn bisection_three_particles_matches_grid_scan() {
        let ll = [0.0, -5.0, -10.0];
        let d = find_temperature(&ll, 0.0, &cfg(3, 2.0, 1e-10)).unwrap();
        let oracle = grid_scan(&ll, 2.0, 1e-6);
        assert!((d - oracle).abs() < 1e-5, "{d} vs {oracle}");
    }

    #[test]
    fn remainder_respected() {
        let ll = [0.0, -1e-3, -2e-3];
        let phi_done = 0.75;
        let d = find_temperature(&ll, phi_done, &cfg(3, 2.0, 1e-3)).unwrap();
        assert_eq!(d, 0.25);
        assert_eq!(phi_done + d, 1.0);
        assert!(find_temperature(&ll, 1.0, &cfg(3, 2.0, 1e-3)).is_err());
    }

    proptest! {
        #[test]
        fn ess_monotone_in_increment(ll in prop::collection::vec(-50.0f64..0.0, 2..40),
                                     a in 0.001f64..1.0, b in 0.001f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let e_lo = ess(&tempered_weights(&ll, lo).unwrap()).unwrap();
            let e_hi = ess(&tempered_weights(&ll, hi).unwrap()).unwrap();
            prop_assert!(e_hi <= e_lo * (1.0 + 1e-12));
        }

        #[test]
        fn powers_compose(ll in prop::collection::vec(-30.0f64..0.0, 2..30),
                          d1 in 0.01f64..0.5, d2 in 0.01f64..0.5) {
            // reweight the d1 ensemble by d2, compare with a single d1 + d2 step
            let w1 = tempered_weights(&ll, d1).unwrap();
            let w2 = tempered_weights(&ll, d2).unwrap();
            let prod: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a * b).collect();
            let s: f64 = prod.iter().sum();
            let direct = tempered_weights(&ll, d1 + d2).unwrap();
            for (p, d) in prod.iter().zip(&direct) {
                prop_assert!((p / s - d).abs() < 1e-10);
            }
        }

        #[test]
        fn found_increment_respects_threshold(ll in prop::collection::vec(-200.0f64..0.0, 4..60),
                                             phi_done in 0.0f64..0.9) {
            let n = ll.len();
            let c = cfg(n, n as f64 / 2.0, 0.01 * n as f64);
            let phi_done = quantize_down(phi_done);
            let d = find_temperature(&ll, phi_done, &c).unwrap();
            prop_assert!(d > 0.0 && d <= 1.0 - phi_done);
            let e = ess(&tempered_weights(&ll, d).unwrap()).unwrap();
            prop_assert!(e >= c.ess_threshold - c.bisection_tol);
            // dyadic grid keeps partial sums exact
            prop_assert_eq!((phi_done + d) - phi_done, d);
        }
    }
}
