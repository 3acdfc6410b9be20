use serde::{Deserialize, Serialize};

use crate::instance::LpInstance;
use crate::linalg::{singular_values, DenseMatrix, LuFactors};

/// Condition measures of a single instance. Quantities that do not exist
/// (singular basis, no strict complementarity) are `f64::INFINITY`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub m: usize,
    pub n: usize,
    /// `σ₁(A) / σ_m(A)`.
    pub kappa: f64,
    /// `Φ`: `‖x*+s*‖₁` times the largest of
    /// `√(‖(B⁻¹N)_{·j}‖² + 1) / s*_{m+j}` and `√(‖(B⁻¹N)_{i·}‖² + 1) / x*_i`.
    pub phi_big: f64,
    /// Disparity ratio `mean(x*+s*) / min(x*+s*)`.
    pub phi: f64,
    /// `‖B⁻¹‖·‖A‖`.
    pub norm_binv_times_norm_a: f64,
    /// `‖B⁻¹A‖`.
    pub norm_binv_a: f64,
    /// `n·φ·‖B⁻¹A‖`, an upper bound on `Φ`.
    pub bound_binv_a: f64,
    /// `max_j √(‖(B⁻¹N)_{·j}‖² + 1)`.
    pub z_p: f64,
    /// `max_i √(‖(B⁻¹N)_{i·}‖² + 1)`.
    pub z_d: f64,
    /// `min_i (x*_i + s*_i)`.
    pub min_xs: f64,
}

impl ConditionReport {
    /// `n·φ = ‖x*+s*‖₁ / min(x*+s*)`.
    pub fn phi_raw(&self) -> f64 {
        self.n as f64 * self.phi
    }

    /// `n·φ·max(Z_p, Z_d)`, the tighter upper bound on `Φ`.
    pub fn bound_z(&self) -> f64 {
        self.phi_raw() * self.z_p.max(self.z_d)
    }
}

/// Computes [`ConditionReport`] from the instance's basis and optimum.
pub fn condition_report(inst: &LpInstance) -> ConditionReport {
    let (m, n) = (inst.m, inst.n);
    let sv_a = singular_values(&inst.a);
    let sigma1 = sv_a[0];
    let sigma_m = sv_a[m - 1];
    let kappa = if sigma_m > 0.0 { sigma1 / sigma_m } else { f64::INFINITY };

    let u = inst.u();
    let l1: f64 = u.iter().sum();
    let min_xs = u.iter().copied().fold(f64::INFINITY, f64::min);
    let phi = if min_xs > 0.0 { l1 / (n as f64 * min_xs) } else { f64::INFINITY };

    let mut report = ConditionReport {
        m,
        n,
        kappa,
        phi_big: f64::INFINITY,
        phi,
        norm_binv_times_norm_a: f64::INFINITY,
        norm_binv_a: f64::INFINITY,
        bound_binv_a: f64::INFINITY,
        z_p: f64::INFINITY,
        z_d: f64::INFINITY,
        min_xs,
    };

    let basis = &inst.basis;
    let nonbasis = inst.nonbasis();
    let b = inst.a.select_columns(basis);
    let Ok(lu) = LuFactors::factor(&b) else {
        return report;
    };
    let sv_b = singular_values(&b);
    if sv_b[m - 1] > 0.0 {
        report.norm_binv_times_norm_a = sigma1 / sv_b[m - 1];
    }
    let Ok(binv_n) = lu.solve_matrix(&inst.a.select_columns(&nonbasis)) else {
        return report;
    };
    let d = nonbasis.len();

    let mut col_sq = vec![0.0; d];
    let mut row_sq = vec![0.0; m];
    for i in 0..m {
        for (j, &v) in binv_n.row(i).iter().enumerate() {
            col_sq[j] += v * v;
            row_sq[i] += v * v;
        }
    }
    report.z_p = col_sq.iter().map(|c| (c + 1.0).sqrt()).fold(1.0, f64::max);
    report.z_d = row_sq.iter().map(|r| (r + 1.0).sqrt()).fold(1.0, f64::max);

    // B⁻¹A in basis order is [I  B⁻¹N]; column order does not change the norm
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        data.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        data.extend_from_slice(binv_n.row(i));
    }
    let binv_a = DenseMatrix::new(m, n, data).expect("finite B⁻¹A");
    report.norm_binv_a = singular_values(&binv_a)[0];
    report.bound_binv_a = report.phi_raw() * report.norm_binv_a;

    let x_b: Vec<f64> = basis.iter().map(|&j| inst.x_star[j]).collect();
    let s_n: Vec<f64> = nonbasis.iter().map(|&j| inst.s_star[j]).collect();
    if x_b.iter().chain(&s_n).all(|&v| v > 0.0) {
        let primal = col_sq
            .iter()
            .zip(&s_n)
            .map(|(c, s)| (c + 1.0).sqrt() / s)
            .fold(0.0, f64::max);
        let dual = row_sq
            .iter()
            .zip(&x_b)
            .map(|(r, x)| (r + 1.0).sqrt() / x)
            .fold(0.0, f64::max);
        report.phi_big = l1 * primal.max(dual);
    }
    report
}

/// `Φ ≤ (1 + 1e-9)·min(n·φ·‖B⁻¹A‖, n·φ·max(Z_p, Z_d))`; true when `Φ` is
/// infinite.
pub fn verify_bound_chain(report: &ConditionReport) -> bool {
    if !report.phi_big.is_finite() {
        return true;
    }
    let bound = report.bound_binv_a.min(report.bound_z());
    report.phi_big <= (1.0 + 1e-9) * bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        assemble, gen_disparity, generate, GeneratorSpec, MatrixDistribution,
        SolutionDistribution,
    };
    use nalgebra::{DMatrix, SymmetricEigen};

    fn identity_instance() -> LpInstance {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]]).unwrap();
        assemble(
            a,
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            false,
            0,
            MatrixDistribution::gaussian(),
            SolutionDistribution::FixedVector { values: vec![1.0; 4] },
        )
        .unwrap()
    }

    #[test]
    fn identity_blocks() {
        let r = condition_report(&identity_instance());
        let s2 = 2f64.sqrt();
        assert!((r.phi_big - 4.0 * s2).abs() < 1e-12);
        assert!((r.phi - 1.0).abs() < 1e-15);
        assert!((r.z_p - s2).abs() < 1e-12 && (r.z_d - s2).abs() < 1e-12);
        assert!((r.norm_binv_a - s2).abs() < 1e-12);
        assert!((r.bound_binv_a - 4.0 * s2).abs() < 1e-12);
        assert!((r.kappa - 1.0).abs() < 1e-12);
        assert!(verify_bound_chain(&r));
    }

    #[test]
    fn disparity_phi_matches_closed_form() {
        for level in [0u32, 1, 3, 6] {
            let (inst, phi_l) = gen_disparity(10, level, &MatrixDistribution::gaussian(), 5, false).unwrap();
            let r = condition_report(&inst);
            let expect = 0.5 + 0.5 * 4f64.powi(level as i32);
            assert!((r.phi - expect).abs() <= 1e-12 * expect, "level {level}: {} vs {expect}", r.phi);
            assert!((phi_l - expect).abs() <= 1e-12 * expect);
            assert!((r.min_xs - 4f64.powi(-(level as i32))).abs() < 1e-15);
        }
    }

    #[test]
    fn uncertified_instance_has_infinite_phi() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]]).unwrap();
        let inst = assemble(
            a,
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            false,
            0,
            MatrixDistribution::gaussian(),
            SolutionDistribution::FixedVector { values: vec![1.0, 1.0, 1.0, 0.0] },
        )
        .unwrap();
        let r = condition_report(&inst);
        assert!(r.phi_big.is_infinite() && r.phi.is_infinite());
        assert!(r.z_p.is_finite() && r.kappa.is_finite());
        assert!(verify_bound_chain(&r));
    }

    #[test]
    fn bound_chain_on_random_instances() {
        for seed in 0..40 {
            let inst = generate(&GeneratorSpec::gaussian(6, 13), seed).unwrap();
            let r = condition_report(&inst);
            assert!(r.kappa >= 1.0 && r.phi >= 1.0);
            assert!(r.z_p >= 1.0 && r.z_d >= 1.0);
            assert!(r.norm_binv_a >= r.z_p.max(r.z_d) * (1.0 - 1e-12));
            assert!(verify_bound_chain(&r), "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn kappa_scale_invariant() {
        let inst = generate(&GeneratorSpec::gaussian(5, 12), 9).unwrap();
        let mut scaled = inst.clone();
        let alpha = 37.5;
        scaled.a = inst.a.scaled(alpha);
        scaled.b = inst.b.iter().map(|v| v * alpha).collect();
        scaled.y_star = inst.y_star.iter().map(|v| v / alpha).collect();
        scaled.validate().unwrap();
        let (k0, k1) = (condition_report(&inst).kappa, condition_report(&scaled).kappa);
        assert!((k0 - k1).abs() <= 1e-10 * k0);
    }

    fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
        DMatrix::from_row_slice(a.rows(), a.cols(), a.data())
    }

    /// Rows of an orthonormal basis of `null(A)` from the projector's
    /// unit eigenvalues.
    fn null_space_basis(a: &DenseMatrix) -> DMatrix<f64> {
        let na = to_na(a);
        let n = a.cols();
        let gram_inv = (&na * na.transpose()).try_inverse().unwrap();
        let proj = DMatrix::<f64>::identity(n, n) - na.transpose() * gram_inv * &na;
        let eig = SymmetricEigen::new(proj);
        let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
        let mut q = DMatrix::<f64>::zeros(keep.len(), n);
        for (r, &k) in keep.iter().enumerate() {
            q.set_row(r, &eig.eigenvectors.column(k).transpose());
        }
        q
    }

    #[test]
    fn null_space_block_identity() {
        for seed in 0..50 {
            let inst = generate(&GeneratorSpec::gaussian(4, 10), seed).unwrap();
            let q = null_space_basis(&inst.a);
            let (m, n) = (inst.m, inst.n);
            assert_eq!(q.nrows(), n - m);
            let q_basis = q.columns(0, m).into_owned();
            let q_non = q.columns(m, n - m).into_owned();
            let lhs = q_non.lu().solve(&q_basis).unwrap();

            let b = inst.a.select_columns(&inst.basis);
            let binv_n = LuFactors::factor(&b)
                .unwrap()
                .solve_matrix(&inst.a.select_columns(&inst.nonbasis()))
                .unwrap();
            let rhs = -to_na(&binv_n).transpose();
            let resid = (&lhs - &rhs).norm();
            assert!(resid <= 1e-8 * (1.0 + rhs.norm()), "seed {seed}: {resid}");
        }
    }
}
