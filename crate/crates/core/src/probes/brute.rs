use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::LpInstance;
use crate::linalg::LuFactors;

/// Largest `n` accepted by [`brute_force_lp`].
pub const MAX_BRUTE_FORCE_N: usize = 20;

const FEAS_TOL: f64 = 1e-10;
const TIE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// Sorted column indices of the optimal basis.
    pub basis: Vec<usize>,
    pub objective: f64,
    /// Another feasible basis reached the same objective within `1e-10`.
    pub non_unique: bool,
    /// Some basic variable of the returned basis is within `1e-10` of zero.
    pub degenerate: bool,
    pub bases_checked: u64,
}

/// Advances `idx` to the next `m`-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    let mut i = m;
    while i > 0 {
        i -= 1;
        if idx[i] < n - m + i {
            idx[i] += 1;
            for k in i + 1..m {
                idx[k] = idx[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the instance by enumerating every basis: each nonsingular `B` with
/// `B⁻¹b ≥ −1e-10` is a vertex, and the cheapest one wins, the
/// lexicographically smallest basis on ties. Returns the vertex with
/// `y = B⁻ᵀc_B` and `s = c − Aᵀy`.
pub fn brute_force_lp(inst: &LpInstance) -> Result<BruteForceSolution> {
    let (m, n) = (inst.m, inst.n);
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::Argument(format!(
            "brute force limited to n <= {MAX_BRUTE_FORCE_N}, got {n}"
        )));
    }
    if m == 0 || m > n {
        return Err(Error::Dimension(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>, LuFactors)> = None;
    let mut non_unique = false;
    let mut checked = 0u64;
    loop {
        checked += 1;
        if let Ok(lu) = LuFactors::factor(&inst.a.select_columns(&idx)) {
            let x_b = lu.solve(&inst.b)?;
            if x_b.iter().all(|&v| v >= -FEAS_TOL) {
                let obj: f64 = idx.iter().zip(&x_b).map(|(&j, &v)| inst.c[j] * v).sum();
                match &best {
                    Some((b, ..)) if obj >= *b - TIE_TOL => {
                        if obj <= *b + TIE_TOL {
                            non_unique = true;
                        }
                    }
                    _ => {
                        best = Some((obj, idx.clone(), x_b, lu));
                        non_unique = false;
                    }
                }
            }
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    let (objective, basis, x_b, lu) = best.ok_or(Error::Infeasible)?;
    let degenerate = x_b.iter().any(|v| v.abs() <= FEAS_TOL);
    let mut x = vec![0.0; n];
    for (&j, &v) in basis.iter().zip(&x_b) {
        x[j] = v.max(0.0);
    }
    let c_b: Vec<f64> = basis.iter().map(|&j| inst.c[j]).collect();
    let y = lu.solve_transpose(&c_b)?;
    let aty = inst.a.matvec_t(&y)?;
    let s: Vec<f64> = inst.c.iter().zip(&aty).map(|(c, v)| c - v).collect();
    Ok(BruteForceSolution {
        x,
        y,
        s,
        basis,
        objective,
        non_unique,
        degenerate,
        bases_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{assemble, generate, GeneratorSpec, MatrixDistribution, SolutionDistribution};
    use crate::linalg::DenseMatrix;

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn combinations_in_order() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn two_vertices() {
        let inst = assemble(
            DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            false,
            0,
            MatrixDistribution::gaussian(),
            SolutionDistribution::FixedVector { values: vec![1.0, 1.0] },
        )
        .unwrap();
        assert_eq!(inst.c, vec![0.0, 1.0]);
        let sol = brute_force_lp(&inst).unwrap();
        assert_eq!(sol.x, vec![1.0, 0.0]);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.bases_checked, 2);
        assert!(!sol.non_unique && !sol.degenerate);
    }

    #[test]
    fn matches_generator_certificate() {
        for seed in 0..200 {
            let m = 2 + (seed as usize % 3);
            let spec = GeneratorSpec {
                presolve: seed % 2 == 0,
                ..GeneratorSpec::gaussian(m, m + 2 + (seed as usize % 7))
            };
            let inst = generate(&spec, seed).unwrap();
            let sol = brute_force_lp(&inst).unwrap();
            assert_eq!(sol.basis, inst.basis, "seed {seed}");
            assert!(max_diff(&sol.x, &inst.x_star) <= 1e-8, "seed {seed}");
            assert!(max_diff(&sol.s, &inst.s_star) <= 1e-8, "seed {seed}");
            assert!(max_diff(&sol.y, &inst.y_star) <= 1e-8, "seed {seed}");
            assert!(!sol.non_unique);
        }
    }

    #[test]
    fn rejects_large_instances() {
        let inst = generate(&GeneratorSpec::gaussian(3, 21), 0).unwrap();
        assert!(matches!(brute_force_lp(&inst), Err(Error::Argument(_))));
    }
}
