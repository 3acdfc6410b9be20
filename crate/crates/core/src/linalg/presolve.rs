use super::{axpy, dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Output of [`min_norm_presolve`].
#[derive(Clone, Debug, PartialEq)]
pub struct Presolved {
    /// Minimizer of `‖s + Aᵀy‖`.
    pub y_hat: Vec<f64>,
    /// `s + Aᵀ y_hat`, the projection of `s` onto the null space of `A`.
    pub c_bar: Vec<f64>,
    pub iterations: usize,
}

/// Replaces an objective `s` by its minimum-norm equivalent `c̄ = s + Aᵀŷ`.
///
/// `ŷ` solves the normal equations `AAᵀŷ = −As` by conjugate gradients,
/// applying `AAᵀ` as two products per step. The iteration stops once the
/// *true* residual `‖A c̄‖` is at most `rel_tol · ‖As‖`, or at the roundoff
/// level `64 ε ‖A‖_F ‖s‖` of evaluating `As` itself; the budget is `10·m`
/// steps.
pub fn min_norm_presolve(a: &DenseMatrix, s: &[f64], rel_tol: f64) -> Result<Presolved> {
    let (m, n) = (a.rows(), a.cols());
    if s.len() != n {
        return Err(Error::Dimension(format!(
            "presolve: objective of length {} for {n} columns",
            s.len()
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::Argument(format!("presolve rel_tol {rel_tol} must be positive")));
    }
    let rhs: Vec<f64> = a.matvec(s)?.into_iter().map(|v| -v).collect();
    let rhs_norm = norm2(&rhs);
    let mut y = vec![0.0; m];
    if rhs_norm == 0.0 {
        return Ok(Presolved {
            y_hat: y,
            c_bar: s.to_vec(),
            iterations: 0,
        });
    }
    let floor = 64.0 * f64::EPSILON * a.frobenius_norm() * norm2(s);
    let target = (rel_tol * rhs_norm).max(floor);
    let budget = 10 * m.max(1);

    let mut tmp_n = vec![0.0; n];
    let mut c_bar = s.to_vec();
    let mut true_residual = |y: &[f64], c_bar: &mut Vec<f64>, r: &mut Vec<f64>| {
        a.matvec_t_into(y, &mut tmp_n);
        for ((c, &si), &t) in c_bar.iter_mut().zip(s).zip(&tmp_n) {
            *c = si + t;
        }
        a.matvec_into(c_bar, r);
        r.iter_mut().for_each(|v| *v = -*v);
        norm2(r)
    };

    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; m];
    let mut atp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    let mut achieved = rhs_norm;
    while iterations < budget {
        a.matvec_t_into(&p, &mut atp);
        a.matvec_into(&atp, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut y);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            achieved = true_residual(&y, &mut c_bar, &mut r);
            if achieved <= target {
                return Ok(Presolved {
                    y_hat: y,
                    c_bar,
                    iterations,
                });
            }
            // recursive residual drifted; restart from the true one
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    achieved = achieved.min(true_residual(&y, &mut c_bar, &mut r));
    if achieved <= target {
        return Ok(Presolved {
            y_hat: y,
            c_bar,
            iterations,
        });
    }
    Err(Error::Convergence {
        iterations,
        target: rel_tol,
        achieved: achieved / rhs_norm,
    })
}
