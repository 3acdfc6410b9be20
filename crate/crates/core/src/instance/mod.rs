//! Random instance families with optima known by construction.
//!
//! An instance is `min cᵀx s.t. Ax = b, x ≥ 0` with `b = A x̂` and `c = ŝ`
//! (or its minimum-norm equivalent), where `x̂ = (u¹, 0)` and `ŝ = (0, u²)`
//! have disjoint supports. When the basis submatrix is nonsingular and
//! `u > 0`, `(x̂, ŝ)` is the unique primal-dual optimum.

mod gen;
mod hexfloat;
mod io;
mod mps;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist2, norm2, DenseMatrix};
use crate::rng::Sampler;

pub use gen::{
    assemble, disparity_phi, disparity_vector, gen_disparity, generate, sample_matrix,
    sample_solution, GeneratorSpec, PRESOLVE_REL_TOL,
};
pub use hexfloat::{format_hex, parse_hex};
pub use io::{load_instance, read_instance, save_instance, write_instance, FORMAT_VERSION};
pub use mps::{export_mps, write_mps};

/// Entry law of the constraint matrix. Every kind is mean zero, unit variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// Standard normal.
    Gaussian,
    /// ±1 with equal probability.
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformUnitVar,
}

impl MatrixKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            "uniform" | "uniform_unit_var" | "uniform-unit-var" => Ok(Self::UniformUnitVar),
            other => Err(Error::Argument(format!("unknown matrix distribution `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Rademacher => "rademacher",
            Self::UniformUnitVar => "uniform_unit_var",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDistribution {
    pub kind: MatrixKind,
    /// Sub-Gaussian parameter of one entry. Informational; the tail probes
    /// use it to scale their thresholds.
    pub sigma_a: f64,
}

impl MatrixDistribution {
    /// All three shipped laws are strictly sub-Gaussian (variance proxy equal
    /// to the variance), so the parameter is 1.
    pub fn new(kind: MatrixKind) -> Self {
        Self { kind, sigma_a: 1.0 }
    }

    pub fn gaussian() -> Self {
        Self::new(MatrixKind::Gaussian)
    }

    #[inline]
    pub fn sample(&self, s: &mut Sampler) -> f64 {
        match self.kind {
            MatrixKind::Gaussian => s.normal(),
            MatrixKind::Rademacher => s.rademacher(),
            MatrixKind::UniformUnitVar => 3f64.sqrt() * (2.0 * s.uniform_open() - 1.0),
        }
    }
}

impl Default for MatrixDistribution {
    fn default() -> Self {
        Self::gaussian()
    }
}

/// Law of the positive optimal components `u = (u¹, u²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionDistribution {
    /// i.i.d. `|Z|`, `Z` standard normal.
    FoldedGaussian,
    /// A given nonnegative vector of length `n`.
    FixedVector { values: Vec<f64> },
    /// `u¹ = u² = (4^{−l} × ⌊m/2⌋, 1 × (m − ⌊m/2⌋))`; requires `n = 2m`.
    DisparityLevel { level: u32 },
}

impl SolutionDistribution {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FoldedGaussian => "folded_gaussian",
            Self::FixedVector { .. } => "fixed_vector",
            Self::DisparityLevel { .. } => "disparity_level",
        }
    }

    pub fn level(&self) -> Option<u32> {
        match self {
            Self::DisparityLevel { level } => Some(*level),
            _ => None,
        }
    }
}

/// Generation record carried with every instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub matrix: MatrixDistribution,
    pub solution: SolutionDistribution,
    /// Basis submatrix nonsingular and `min u > 0`: the optimum is unique.
    pub certified: bool,
    /// `σ_min(B) / σ_max(B)`.
    pub basis_rcond: f64,
    /// `min_i (x*_i + s*_i)`.
    pub min_u: f64,
    /// Columns were permuted after assembly.
    pub shuffled: bool,
}

/// A standard-form LP with its certified optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct LpInstance {
    pub m: usize,
    pub n: usize,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub x_star: Vec<f64>,
    pub s_star: Vec<f64>,
    pub y_star: Vec<f64>,
    /// Optimal basis, ascending, 0-based.
    pub basis: Vec<usize>,
    pub seed: u64,
    pub presolved: bool,
    pub meta: InstanceMeta,
}

impl LpInstance {
    pub fn d(&self) -> usize {
        self.n - self.m
    }

    /// Complement of the basis, ascending.
    pub fn nonbasis(&self) -> Vec<usize> {
        let mut in_basis = vec![false; self.n];
        self.basis.iter().for_each(|&j| in_basis[j] = true);
        (0..self.n).filter(|&j| !in_basis[j]).collect()
    }

    /// `x* + s*`.
    pub fn u(&self) -> Vec<f64> {
        self.x_star
            .iter()
            .zip(&self.s_star)
            .map(|(x, s)| x + s)
            .collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.c, x)
    }

    /// Checks every structural and numerical invariant of a stored instance.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        let (m, n) = (self.m, self.n);
        if m == 0 || n <= m {
            return fail(format!("need 1 <= m < n, got m={m}, n={n}"));
        }
        if self.a.rows() != m || self.a.cols() != n {
            return fail(format!(
                "A is {}x{}, expected {m}x{n}",
                self.a.rows(),
                self.a.cols()
            ));
        }
        for (name, v, len) in [
            ("b", &self.b, m),
            ("c", &self.c, n),
            ("x_star", &self.x_star, n),
            ("s_star", &self.s_star, n),
            ("y_star", &self.y_star, m),
        ] {
            if v.len() != len {
                return fail(format!("{name} has length {}, expected {len}", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return fail(format!("{name} has a non-finite entry"));
            }
        }
        if self.basis.len() != m
            || self.basis.windows(2).any(|w| w[0] >= w[1])
            || self.basis.last().is_some_and(|&j| j >= n)
        {
            return fail(format!("basis {:?} is not {m} ascending indices below {n}", self.basis));
        }
        if self.x_star.iter().chain(&self.s_star).any(|&v| v < 0.0) {
            return fail("x_star and s_star must be nonnegative".into());
        }
        let mut in_basis = vec![false; n];
        self.basis.iter().for_each(|&j| in_basis[j] = true);
        for j in 0..n {
            if in_basis[j] && self.s_star[j] != 0.0 {
                return fail(format!("s_star[{j}] nonzero on a basic index"));
            }
            if !in_basis[j] && self.x_star[j] != 0.0 {
                return fail(format!("x_star[{j}] nonzero off the basis"));
            }
        }
        let a_fro = self.a.frobenius_norm();
        let ax = self.a.matvec(&self.x_star)?;
        let primal = dist2(&ax, &self.b);
        let primal_tol = 1e-12 * (1.0 + a_fro * norm2(&self.x_star));
        if primal > primal_tol {
            return fail(format!("primal residual {primal:e} exceeds {primal_tol:e}"));
        }
        let mut aty = self.a.matvec_t(&self.y_star)?;
        crate::linalg::axpy(1.0, &self.s_star, &mut aty);
        let dual = dist2(&aty, &self.c);
        let dual_tol = 1e-10 * (1.0 + norm2(&self.c));
        if dual > dual_tol {
            return fail(format!("dual residual {dual:e} exceeds {dual_tol:e}"));
        }
        if self.presolved {
            let ac = norm2(&self.a.matvec(&self.c)?);
            let tol = 1e-8 * a_fro * (1.0 + norm2(&self.c));
            if ac > tol {
                return fail(format!("presolved objective has ‖Ac‖ = {ac:e} > {tol:e}"));
            }
        }
        Ok(())
    }

    /// Permutes variables: new column `k` is old column `perm[k]`. Updates
    /// `A`, `c`, `x*`, `s*` and the basis consistently.
    pub fn permute_columns(&mut self, perm: &[usize]) -> Result<()> {
        let n = self.n;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Argument("not a permutation of the columns".into()));
        }
        let was_basic = {
            let mut v = vec![false; n];
            self.basis.iter().for_each(|&j| v[j] = true);
            v
        };
        self.a = self.a.select_columns(perm);
        let pick = |v: &[f64]| perm.iter().map(|&p| v[p]).collect::<Vec<_>>();
        self.c = pick(&self.c);
        self.x_star = pick(&self.x_star);
        self.s_star = pick(&self.s_star);
        self.basis = (0..n).filter(|&k| was_basic[perm[k]]).collect();
        self.meta.shuffled = true;
        Ok(())
    }
}
