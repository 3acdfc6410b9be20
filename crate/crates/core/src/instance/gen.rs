use serde::{Deserialize, Serialize};

use super::{InstanceMeta, LpInstance, MatrixDistribution, SolutionDistribution};
use crate::error::{Error, Result};
use crate::linalg::{min_norm_presolve, singular_values, DenseMatrix, RANK_THRESHOLD};
use crate::rng::{Sampler, STREAM_MATRIX, STREAM_SHUFFLE, STREAM_SOLUTION};

/// CG tolerance used when an instance is presolved.
pub const PRESOLVE_REL_TOL: f64 = 1e-12;

/// `m × n` matrix with i.i.d. entries from `dist`.
pub fn sample_matrix(m: usize, n: usize, dist: &MatrixDistribution, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::Argument(format!("need m, n >= 1, got m={m}, n={n}")));
    }
    let mut s = Sampler::new(seed, STREAM_MATRIX);
    let data = (0..m * n).map(|_| dist.sample(&mut s)).collect();
    DenseMatrix::new(m, n, data)
}

/// `u^l` of the disparity family: `⌊m/2⌋` copies of `4^{−l}`, then ones.
pub fn disparity_vector(m: usize, level: u32) -> Vec<f64> {
    let small = 4f64.powi(-(level as i32));
    (0..m).map(|i| if i < m / 2 { small } else { 1.0 }).collect()
}

/// Disparity ratio `mean(u)/min(u)` of the level-`l` family with `n = 2m`:
/// `⌊m/2⌋/m + (1 − ⌊m/2⌋/m)·4^{l}`.
pub fn disparity_phi(m: usize, level: u32) -> f64 {
    let frac = (m / 2) as f64 / m as f64;
    frac + (1.0 - frac) * 4f64.powi(level as i32)
}

/// `(x̂, ŝ) = ((u¹, 0_d), (0_m, u²))`.
pub fn sample_solution(
    m: usize,
    d: usize,
    dist: &SolutionDistribution,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = m + d;
    let u: Vec<f64> = match dist {
        SolutionDistribution::FoldedGaussian => {
            let mut s = Sampler::new(seed, STREAM_SOLUTION);
            (0..n).map(|_| s.normal().abs()).collect()
        }
        SolutionDistribution::FixedVector { values } => {
            if values.len() != n {
                return Err(Error::Argument(format!(
                    "fixed vector has length {}, expected {n}",
                    values.len()
                )));
            }
            if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Argument("fixed vector entries must be finite and >= 0".into()));
            }
            values.clone()
        }
        SolutionDistribution::DisparityLevel { level } => {
            if d != m {
                return Err(Error::Argument(format!(
                    "disparity family needs n = 2m, got m={m}, d={d}"
                )));
            }
            let ul = disparity_vector(m, *level);
            ul.iter().chain(&ul).copied().collect()
        }
    };
    let mut x_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    x_hat[..m].copy_from_slice(&u[..m]);
    s_hat[m..].copy_from_slice(&u[m..]);
    Ok((x_hat, s_hat))
}

/// Builds the LP with `b = A x̂` and `c = ŝ` (or `c̄ = ŝ + Aᵀŷ` when
/// presolving, in which case `y* = ŷ`), with basis `{0, …, m−1}`.
///
/// Rejects a numerically singular basis submatrix
/// (`σ_min(B) ≤ 1e-10·σ_max(B)`) with [`Error::CertificationFailed`]; the
/// caller decides whether to resample. A nonsingular `B` with some
/// `x̂_i + ŝ_i = 0` is returned with `meta.certified = false`.
pub fn assemble(
    a: DenseMatrix,
    x_hat: Vec<f64>,
    s_hat: Vec<f64>,
    presolve: bool,
    seed: u64,
    matrix: MatrixDistribution,
    solution: SolutionDistribution,
) -> Result<LpInstance> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || m >= n {
        return Err(Error::Argument(format!("need 1 <= m < n, got m={m}, n={n}")));
    }
    if x_hat.len() != n || s_hat.len() != n {
        return Err(Error::Dimension(format!(
            "x_hat/s_hat lengths {}/{} for n = {n}",
            x_hat.len(),
            s_hat.len()
        )));
    }
    if x_hat[m..].iter().any(|&v| v != 0.0) || s_hat[..m].iter().any(|&v| v != 0.0) {
        return Err(Error::Argument(
            "x_hat must vanish off the first m indices and s_hat on them".into(),
        ));
    }
    if x_hat.iter().chain(&s_hat).any(|&v| !(v >= 0.0)) {
        return Err(Error::Argument("x_hat and s_hat must be nonnegative".into()));
    }

    let basis: Vec<usize> = (0..m).collect();
    let sv = singular_values(&a.select_columns(&basis));
    let (smax, smin) = (sv[0], sv[m - 1]);
    if !(smin > RANK_THRESHOLD * smax) {
        return Err(Error::CertificationFailed(format!(
            "basis submatrix numerically singular: sigma_min/sigma_max = {:e}",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    let min_u = x_hat
        .iter()
        .zip(&s_hat)
        .map(|(x, s)| x + s)
        .fold(f64::INFINITY, f64::min);

    let b = a.matvec(&x_hat)?;
    let (c, y_star) = if presolve {
        let p = min_norm_presolve(&a, &s_hat, PRESOLVE_REL_TOL)?;
        (p.c_bar, p.y_hat)
    } else {
        (s_hat.clone(), vec![0.0; m])
    };
    let inst = LpInstance {
        m,
        n,
        a,
        b,
        c,
        x_star: x_hat,
        s_star: s_hat,
        y_star,
        basis,
        seed,
        presolved: presolve,
        meta: InstanceMeta {
            matrix,
            solution,
            certified: min_u > 0.0,
            basis_rcond: smin / smax,
            min_u,
            shuffled: false,
        },
    };
    inst.validate()?;
    Ok(inst)
}

/// Everything that determines an instance apart from its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub m: usize,
    pub n: usize,
    pub matrix: MatrixDistribution,
    pub solution: SolutionDistribution,
    pub presolve: bool,
    /// Permute columns (and the basis) after assembly.
    #[serde(default)]
    pub shuffle: bool,
}

impl GeneratorSpec {
    pub fn gaussian(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            matrix: MatrixDistribution::gaussian(),
            solution: SolutionDistribution::FoldedGaussian,
            presolve: true,
            shuffle: false,
        }
    }
}

/// Samples and assembles one instance.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<LpInstance> {
    let a = sample_matrix(spec.m, spec.n, &spec.matrix, seed)?;
    let (x_hat, s_hat) = sample_solution(spec.m, spec.n - spec.m, &spec.solution, seed)?;
    let mut inst = assemble(
        a,
        x_hat,
        s_hat,
        spec.presolve,
        seed,
        spec.matrix,
        spec.solution.clone(),
    )?;
    if spec.shuffle {
        let perm = Sampler::new(seed, STREAM_SHUFFLE).permutation(spec.n);
        inst.permute_columns(&perm)?;
    }
    Ok(inst)
}

/// Level-`l` disparity instance with `n = 2m`, and its `φ_l`.
pub fn gen_disparity(
    m: usize,
    level: u32,
    dist: &MatrixDistribution,
    seed: u64,
    presolve: bool,
) -> Result<(LpInstance, f64)> {
    if m < 2 {
        return Err(Error::Argument(format!("disparity family needs m >= 2, got {m}")));
    }
    let spec = GeneratorSpec {
        m,
        n: 2 * m,
        matrix: *dist,
        solution: SolutionDistribution::DisparityLevel { level },
        presolve,
        shuffle: false,
    };
    Ok((generate(&spec, seed)?, disparity_phi(m, level)))
}
