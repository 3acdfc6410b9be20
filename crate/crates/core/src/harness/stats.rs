//! Order statistics and log-log regression for batch summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-interpolation quantile of sorted data (`h = (N−1)p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

pub fn quartiles(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return Err(Error::Argument("quantiles of an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(Quartiles {
        q25: quantile_sorted(&v, 0.25),
        q50: quantile_sorted(&v, 0.5),
        q75: quantile_sorted(&v, 0.75),
    })
}

/// Index (1-based) of the order statistic covering a `1 − δ` fraction of `n`.
fn coverage_rank(n: usize, delta: f64) -> usize {
    let want = (1.0 - delta) * n as f64;
    // absorb rounding such as 0.9·100 = 90.00000000000001
    let rank = (want - 1e-9 * n as f64).ceil();
    (rank.max(1.0) as usize).min(n)
}

/// For each `δ`, the smallest count covering at least a `1 − δ` fraction of
/// `counts`: the `⌈(1−δ)N⌉`-th smallest.
pub fn tail_curve_counts(counts: &[u64], delta_grid: &[f64]) -> Result<Vec<(f64, u64)>> {
    if counts.is_empty() {
        return Err(Error::Argument("tail curve of an empty sample".into()));
    }
    if delta_grid.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::Argument("delta grid must lie in (0, 1)".into()));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    Ok(delta_grid
        .iter()
        .map(|&d| (d, sorted[coverage_rank(sorted.len(), d) - 1]))
        .collect())
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits `ln y = slope·ln x + intercept` over the points with `x` in
/// `fit_range` (inclusive, with relative slack `1e-9`).
pub fn loglog_slope(points: &[(f64, f64)], fit_range: (f64, f64)) -> Result<SlopeFit> {
    let (lo, hi) = fit_range;
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| x >= lo * (1.0 - 1e-9) && x <= hi * (1.0 + 1e-9))
        .collect();
    if inside.len() < 2 {
        return Err(Error::Argument(format!(
            "log-log fit needs at least 2 points in [{lo}, {hi}], got {}",
            inside.len()
        )));
    }
    if inside.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::Argument("log-log fit needs positive finite points".into()));
    }
    let k = inside.len() as f64;
    let lx: Vec<f64> = inside.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = inside.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("log-log fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
        points: inside.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Sampler;
    use proptest::prelude::*;

    #[test]
    fn order_statistics() {
        let counts: Vec<u64> = (1..=100).collect();
        let c = tail_curve_counts(&counts, &[0.10, 0.99, 0.5]).unwrap();
        assert_eq!(c, vec![(0.10, 90), (0.99, 1), (0.5, 50)]);
        assert!(tail_curve_counts(&counts, &[0.0]).is_err());
        assert!(tail_curve_counts(&[], &[0.1]).is_err());
    }

    #[test]
    fn below_one_over_n_gives_maximum() {
        let counts: Vec<u64> = (1..=100).rev().collect();
        let c = tail_curve_counts(&counts, &[0.5 / 100.0]).unwrap();
        assert_eq!(c[0].1, 100);
    }

    #[test]
    fn quartile_examples() {
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap().q50, 3.0);
        let q = quartiles(&[7.0; 9]).unwrap();
        assert!(q.q25 == 7.0 && q.q50 == 7.0 && q.q75 == 7.0);
        assert_eq!(quartiles(&[10.0, 20.0]).unwrap().q50, 15.0);
        assert!(quartiles(&[]).is_err());
    }

    #[test]
    fn exact_lines() {
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 7.0 * i as f64)).collect();
        let f = loglog_slope(&pts, (0.0, 100.0)).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, (i as f64).powf(2.5))).collect();
        assert!((loglog_slope(&pts, (0.0, 100.0)).unwrap().slope - 2.5).abs() < 1e-12);
        assert!(loglog_slope(&pts, (3.5, 3.9)).is_err());
    }

    #[test]
    fn noisy_unit_slope() {
        let mut s = Sampler::new(5, 9);
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let x = 10f64.powf(1.0 + i as f64 / 30.0);
                (x, x * (1.0 + 0.05 * (2.0 * s.uniform_open() - 1.0)))
            })
            .collect();
        let f = loglog_slope(&pts, (10.0, 1000.0)).unwrap();
        assert!((0.9..=1.1).contains(&f.slope), "{f:?}");
    }

    proptest! {
        #[test]
        fn curve_nonincreasing_in_delta(counts in proptest::collection::vec(0u64..1000, 1..200)) {
            let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
            let c = tail_curve_counts(&counts, &grid).unwrap();
            prop_assert!(c.windows(2).all(|w| w[0].1 >= w[1].1));
        }

        #[test]
        fn recovers_power_law(slope in -3.0f64..3.0, scale in 0.01f64..100.0) {
            let pts: Vec<(f64, f64)> = (1..20).map(|i| {
                let x = i as f64 * 1.7;
                (x, scale * x.powf(slope))
            }).collect();
            let f = loglog_slope(&pts, (0.0, f64::INFINITY)).unwrap();
            prop_assert!((f.slope - slope).abs() < 1e-9);
        }
    }
}
