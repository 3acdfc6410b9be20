use super::{dot, norm2, DenseMatrix};
use crate::error::{Error, Result};
use crate::rng::{Sampler, STREAM_POWER};

/// Singular values at or below `RANK_THRESHOLD · σ₁` count as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

const POWER_MAX_ITERS: usize = 100_000;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Largest and smallest nonzero singular values of a matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralExtremes {
    pub sigma_max: f64,
    pub sigma_min_nonzero: f64,
    /// Power iterations spent on `sigma_max`.
    pub iterations_used: usize,
}

/// σ₁(A) by power iteration on the smaller Gram matrix (`AAᵀ` or `AᵀA`),
/// applied through two products per step. Stops once successive Rayleigh
/// quotients agree to `rel_tol²` relative. Returns `(σ₁, iterations)`.
pub fn power_sigma_max(a: &DenseMatrix, rel_tol: f64) -> (f64, usize) {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return (0.0, 0);
    }
    let wide = m <= n;
    let (k, other) = if wide { (m, n) } else { (n, m) };
    let mut sampler = Sampler::new(0x5EED_0F_D0_57A7, STREAM_POWER);
    let mut v: Vec<f64> = (0..k).map(|_| sampler.normal()).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut tmp = vec![0.0; other];
    let mut w = vec![0.0; k];
    let mut apply = |v: &[f64], w: &mut [f64]| {
        if wide {
            a.matvec_t_into(v, &mut tmp);
            a.matvec_into(&tmp, w);
        } else {
            a.matvec_into(v, &mut tmp);
            a.matvec_t_into(&tmp, w);
        }
    };
    let tol2 = rel_tol * rel_tol;
    let mut prev = f64::NAN;
    for it in 1..=POWER_MAX_ITERS {
        apply(&v, &mut w);
        let rq = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return (0.0, it);
        }
        if (rq - prev).abs() <= tol2 * rq {
            return (rq.max(0.0).sqrt(), it);
        }
        prev = rq;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    (prev.max(0.0).sqrt(), POWER_MAX_ITERS)
}

/// All singular values, descending, by one-sided (Hestenes) Jacobi
/// orthogonalization of the rows of the wider orientation. Singular values of
/// rank-deficient inputs come out at roundoff level rather than at the square
/// root of roundoff, so the rank threshold is meaningful.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let mut w = if a.rows() <= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let k = w.rows();
    let eps = f64::EPSILON;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let (alpha, beta, gamma) = {
                    let (ri, rj) = (w.row(i), w.row(j));
                    (dot(ri, ri), dot(rj, rj), dot(ri, rj))
                };
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (ri, rj) = w.row_pair_mut(i, j);
                for (xi, xj) in ri.iter_mut().zip(rj.iter_mut()) {
                    let (a, b) = (*xi, *xj);
                    *xi = c * a - s * b;
                    *xj = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..k).map(|i| norm2(w.row(i))).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Extreme singular values used for the step sizes.
///
/// `sigma_max` comes from power iteration to `rel_tol`; `sigma_min_nonzero`
/// is the smallest Jacobi singular value above `RANK_THRESHOLD · sigma_max`.
pub fn spectral_extremes(a: &DenseMatrix, rel_tol: f64) -> Result<SpectralExtremes> {
    if a.rows() > a.cols() {
        return Err(Error::Argument(format!(
            "spectral_extremes expects rows <= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(Error::Argument(format!("rel_tol {rel_tol} outside (0, 1e-2]")));
    }
    let (sigma_max, iterations_used) = power_sigma_max(a, rel_tol);
    if !(sigma_max > 0.0) {
        return Err(Error::DegenerateMatrix);
    }
    let threshold = RANK_THRESHOLD * sigma_max;
    let sigma_min_nonzero = singular_values(a)
        .into_iter()
        .filter(|&s| s > threshold)
        .fold(f64::INFINITY, f64::min);
    if !sigma_min_nonzero.is_finite() {
        return Err(Error::DegenerateMatrix);
    }
    Ok(SpectralExtremes {
        sigma_max,
        sigma_min_nonzero: sigma_min_nonzero.min(sigma_max),
        iterations_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]])
            .unwrap();
        let s = spectral_extremes(&a, 1e-8).unwrap();
        assert!((s.sigma_max - 3.0).abs() < 1e-8);
        assert!((s.sigma_min_nonzero - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity() {
        let s = spectral_extremes(&DenseMatrix::identity(2), 1e-6).unwrap();
        assert!((s.sigma_max - 1.0).abs() < 1e-12);
        assert!((s.sigma_min_nonzero - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            spectral_extremes(&a, 1e-6),
            Err(Error::DegenerateMatrix)
        ));
    }

    #[test]
    fn rank_deficient_skips_zero_singular_value() {
        // rank one: both rows equal
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        let s = spectral_extremes(&a, 1e-8).unwrap();
        let want = (2.0f64 * 14.0).sqrt();
        assert!((s.sigma_max - want).abs() < 1e-7 * want);
        assert!((s.sigma_min_nonzero - want).abs() < 1e-7 * want);
    }

    #[test]
    fn bad_arguments() {
        let tall = DenseMatrix::zeros(3, 2);
        assert!(spectral_extremes(&tall, 1e-6).is_err());
        assert!(spectral_extremes(&DenseMatrix::identity(2), 0.5).is_err());
        assert!(spectral_extremes(&DenseMatrix::identity(2), 0.0).is_err());
    }
}
