//! Monte-Carlo checks of random-matrix and random-vector tail behavior, and
//! a vertex-enumeration LP oracle.

mod brute;

pub use brute::{brute_force_lp, BruteForceSolution, MAX_BRUTE_FORCE_N};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::stats::{loglog_slope, quantile_sorted, SlopeFit};
use crate::instance::{sample_matrix, MatrixDistribution};
use crate::linalg::{power_sigma_max, singular_values};
use crate::parallel::par_map;
use crate::rng::{mix_seed, Sampler, STREAM_SOLUTION};

/// Frequency of one event over independent trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailProbeResult {
    pub trials: u64,
    pub exceed_count: u64,
    pub empirical_rate: f64,
    /// Theoretical bound on the rate, when it has no unknown constants.
    pub bound_rate: Option<f64>,
    pub threshold: f64,
}

impl TailProbeResult {
    fn new(trials: u64, exceed_count: u64, bound_rate: Option<f64>, threshold: f64) -> Self {
        Self {
            trials,
            exceed_count,
            empirical_rate: exceed_count as f64 / trials as f64,
            bound_rate,
            threshold,
        }
    }
}

fn check_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        return Err(Error::Argument(format!("need at least {min} trials, got {trials}")));
    }
    Ok(())
}

fn trial_matrix(m: usize, n: usize, dist: &MatrixDistribution, seed: u64, t: usize) -> Result<crate::linalg::DenseMatrix> {
    sample_matrix(m, n, dist, mix_seed(seed, &[t as u64]))
}

/// Counts `σ₁(A) ≥ 5σ_A√n`; the bound is `e^{−6n}`.
pub fn probe_sigma_max(
    m: usize,
    n: usize,
    dist: &MatrixDistribution,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<TailProbeResult> {
    check_trials(trials, 1)?;
    let threshold = 5.0 * dist.sigma_a * (n as f64).sqrt();
    let hits = par_map(trials as usize, threads, |t| -> Result<bool> {
        let a = trial_matrix(m, n, dist, seed, t)?;
        let (s1, _) = power_sigma_max(&a, 1e-6);
        Ok(s1 >= threshold)
    });
    let count = hits.into_iter().collect::<Result<Vec<_>>>()?.into_iter().filter(|&h| h).count();
    Ok(TailProbeResult::new(trials, count as u64, Some((-6.0 * n as f64).exp()), threshold))
}

/// For each `ε`, the frequency of `σ_m(A) ≤ ε(√n − √(m−1))`. No bound is
/// reported.
pub fn probe_sigma_min(
    m: usize,
    n: usize,
    dist: &MatrixDistribution,
    trials: u64,
    eps_grid: &[f64],
    seed: u64,
    threads: usize,
) -> Result<Vec<TailProbeResult>> {
    check_trials(trials, 1)?;
    if m == 0 || m > n {
        return Err(Error::Argument(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Argument("eps grid must be positive".into()));
    }
    let scale = (n as f64).sqrt() - ((m - 1) as f64).sqrt();
    let smin = par_map(trials as usize, threads, |t| -> Result<f64> {
        let a = trial_matrix(m, n, dist, seed, t)?;
        Ok(singular_values(&a)[m - 1])
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(eps_grid
        .iter()
        .map(|&eps| {
            let thr = eps * scale;
            let count = smin.iter().filter(|&&s| s <= thr).count() as u64;
            TailProbeResult::new(trials, count, None, thr)
        })
        .collect())
}

/// Empirical quantiles of `κ = σ₁/σ_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaQuantiles {
    pub m: usize,
    pub n: usize,
    pub trials: u64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

pub fn probe_kappa(
    m: usize,
    n: usize,
    dist: &MatrixDistribution,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<KappaQuantiles> {
    check_trials(trials, 100)?;
    if m == 0 || m > n {
        return Err(Error::Argument(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    let mut kappas = par_map(trials as usize, threads, |t| -> Result<f64> {
        let a = trial_matrix(m, n, dist, seed, t)?;
        let sv = singular_values(&a);
        Ok(if sv[m - 1] > 0.0 { sv[0] / sv[m - 1] } else { f64::INFINITY })
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    kappas.sort_by(f64::total_cmp);
    Ok(KappaQuantiles {
        m,
        n,
        trials,
        q50: quantile_sorted(&kappas, 0.5),
        q90: quantile_sorted(&kappas, 0.9),
        q99: quantile_sorted(&kappas, 0.99),
    })
}

/// `‖u‖₁ / min u` for `u` i.i.d. folded Gaussian of length `n`.
pub fn sample_phi_raw(n: usize, seed: u64) -> f64 {
    let mut s = Sampler::new(seed, STREAM_SOLUTION);
    let (mut sum, mut min) = (0.0, f64::INFINITY);
    for _ in 0..n {
        let v = s.normal().abs();
        sum += v;
        min = min.min(v);
    }
    if min > 0.0 {
        sum / min
    } else {
        f64::INFINITY
    }
}

/// For each `t`, the frequency of `‖u‖₁ / min u ≥ t` with folded-Gaussian `u`.
pub fn probe_phi(n: usize, trials: u64, t_grid: &[f64], seed: u64, threads: usize) -> Result<Vec<TailProbeResult>> {
    check_trials(trials, 1)?;
    if n == 0 {
        return Err(Error::Argument("probe_phi needs n >= 1".into()));
    }
    let mut phis = par_map(trials as usize, threads, |t| sample_phi_raw(n, mix_seed(seed, &[t as u64])));
    phis.sort_by(f64::total_cmp);
    Ok(t_grid
        .iter()
        .map(|&t| {
            let below = phis.partition_point(|&p| p < t);
            TailProbeResult::new(trials, (phis.len() - below) as u64, None, t)
        })
        .collect())
}

/// Log-log fit of rate against threshold over the points with
/// `rate ≤ max_rate` and at least `min_count` hits.
pub fn fit_tail_decay(results: &[TailProbeResult], max_rate: f64, min_count: u64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.empirical_rate <= max_rate && r.exceed_count >= min_count && r.threshold > 0.0)
        .map(|r| (r.threshold, r.empirical_rate))
        .collect();
    loglog_slope(&pts, (f64::MIN_POSITIVE, f64::INFINITY))
}

/// `k` points spaced evenly in log between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}
