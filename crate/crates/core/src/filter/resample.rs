use crate::ensemble::check_normalized;
use crate::error::FilterError;
use crate::rng::RngStream;

/// Systematic resampling: one uniform offset, `N` evenly spaced points
/// through the cumulative weights. Returns ancestor indices in
/// non-decreasing order; particle `l` appears `floor(N w_l)` or
/// `ceil(N w_l)` times.
pub fn systematic_resample(weights: &[f64], rng: &mut RngStream) -> Result<Vec<usize>, FilterError> {
    check_normalized(weights)?;
    let n = weights.len();
    let last_positive = weights
        .iter()
        .rposition(|w| *w > 0.0)
        .ok_or(FilterError::DegenerateLikelihood)?;
    let offset = rng.uniform();
    let mut out = Vec::with_capacity(n);
    // compare in units of 1/N to keep the points on integers + offset
    let mut scaled_cum = weights[0] * n as f64;
    let mut l = 0;
    for i in 0..n {
        let point = i as f64 + offset;
        while point >= scaled_cum && l < last_positive {
            l += 1;
            scaled_cum += weights[l] * n as f64;
        }
        out.push(l);
    }
    Ok(out)
}

/// Flags every slot whose ancestor occurs more than once.
pub fn duplicate_flags(ancestors: &[usize], n_source: usize) -> Vec<bool> {
    let mut counts = vec![0usize; n_source];
    for &a in ancestors {
        counts[a] += 1;
    }
    ancestors.iter().map(|&a| counts[a] > 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    fn counts(idx: &[usize], n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for &i in idx {
            c[i] += 1;
        }
        c
    }

    #[test]
    fn uniform_weights_identity() {
        for seed in 0..20 {
            let mut rng = RngStream::keyed(seed, 0, 0, Purpose::User(4));
            let idx = systematic_resample(&[0.02; 50], &mut rng).unwrap();
            assert_eq!(idx, (0..50).collect::<Vec<_>>());
        }
    }

    #[test]
    fn degenerate_weight_all_zero_index() {
        let mut w = vec![0.0; 10];
        w[0] = 1.0;
        let mut rng = RngStream::keyed(1, 0, 0, Purpose::User(4));
        assert_eq!(systematic_resample(&w, &mut rng).unwrap(), vec![0; 10]);
    }

    #[test]
    fn trailing_zero_weights_never_selected() {
        let w = [0.3, 0.7, 0.0, 0.0];
        for seed in 0..100 {
            let mut rng = RngStream::keyed(seed, 0, 0, Purpose::User(4));
            let idx = systematic_resample(&w, &mut rng).unwrap();
            assert!(idx.iter().all(|&i| i < 2));
        }
    }

    #[test]
    fn counts_are_floor_or_ceil() {
        let mut g = RngStream::keyed(2, 0, 0, Purpose::User(5));
        for rep in 0..200 {
            let n = 2 + rep % 60;
            let raw: Vec<f64> = (0..n).map(|_| g.uniform().powi(3)).collect();
            let s: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let mut rng = RngStream::keyed(rep as u64, 0, 0, Purpose::User(6));
            let c = counts(&systematic_resample(&w, &mut rng).unwrap(), n);
            for (cl, wl) in c.iter().zip(&w) {
                let nw = wl * n as f64;
                assert!(
                    *cl as f64 >= nw.floor() - 1e-9 && *cl as f64 <= nw.ceil() + 1e-9,
                    "count {cl} for N w = {nw}"
                );
            }
        }
    }

    #[test]
    fn unbiased_counts() {
        let w = [0.07, 0.13, 0.41, 0.11, 0.28];
        let n = w.len();
        let reps = 10_000;
        let mut sum = vec![0.0; n];
        let mut sumsq = vec![0.0; n];
        for r in 0..reps {
            let mut rng = RngStream::keyed(77, r, 0, Purpose::User(7));
            let c = counts(&systematic_resample(&w, &mut rng).unwrap(), n);
            for l in 0..n {
                sum[l] += c[l] as f64;
                sumsq[l] += (c[l] as f64).powi(2);
            }
        }
        for l in 0..n {
            let mean = sum[l] / reps as f64;
            let var = sumsq[l] / reps as f64 - mean * mean;
            let se = (var / reps as f64).sqrt().max(1e-12);
            let target = n as f64 * w[l];
            assert!(
                (mean - target).abs() <= 3.0 * se + 1e-12,
                "index {l}: mean {mean}, target {target}, se {se}"
            );
        }
    }

    #[test]
    fn duplicates_flagged() {
        assert_eq!(
            duplicate_flags(&[0, 0, 2, 3, 3, 3], 6),
            vec![true, true, false, true, true, true]
        );
    }
}
