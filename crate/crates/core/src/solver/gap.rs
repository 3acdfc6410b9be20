use crate::error::{Error, Result};
use crate::instance::LpInstance;

/// `(Aᵀy − c, b − Ax)`: the gradient of `ẑ ↦ L(x, ŷ) − L(x̂, y)` at `ẑ = z`.
pub(crate) fn gradient(inst: &LpInstance, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
    inst.a.matvec_t_into(y, gx);
    for (g, &c) in gx.iter_mut().zip(&inst.c) {
        *g -= c;
    }
    inst.a.matvec_into(x, gy);
    for (g, &b) in gy.iter_mut().zip(&inst.b) {
        *g = b - *g;
    }
}

const MAX_BRACKET_STEPS: usize = 2_000;
const MAX_BISECTIONS: usize = 400;

/// `(1/r) · max { gᵀd : ‖d‖ ≤ r, x + d_x ≥ 0 }` for `g = (gx, gy)`.
///
/// The maximizer is `d(λ) = (max(−x, gx/λ), gy/λ)` for the multiplier `λ > 0`
/// with `‖d(λ)‖ = r`; `‖d(λ)‖` is decreasing in `λ`, so `λ` is found by
/// bisection until the norm is within `tol · r` of `r`. When the ball
/// constraint can be slack (`gy = 0`, `gx ≤ 0` and `‖x_{gx<0}‖ ≤ r`) the limit
/// `d_x = −x` on `gx < 0` is returned.
pub fn gap_from_gradient(x: &[f64], gx: &[f64], gy: &[f64], r: f64, tol: f64) -> f64 {
    let gy2: f64 = gy.iter().map(|v| v * v).sum();
    let gnorm = (gx.iter().map(|v| v * v).sum::<f64>() + gy2).sqrt();
    if gnorm == 0.0 {
        return 0.0;
    }
    let t = r / gnorm;
    if x.iter().zip(gx).all(|(&xi, &gi)| xi + t * gi >= 0.0) {
        return gnorm;
    }
    if gy2 == 0.0 && gx.iter().all(|&g| g <= 0.0) {
        let lim2: f64 = x
            .iter()
            .zip(gx)
            .filter(|(_, &g)| g < 0.0)
            .map(|(&xi, _)| xi * xi)
            .sum();
        if lim2 <= r * r {
            let value: f64 = x
                .iter()
                .zip(gx)
                .filter(|(_, &g)| g < 0.0)
                .map(|(&xi, &g)| -g * xi)
                .sum();
            return value / r;
        }
    }
    let norm_at = |lam: f64| -> f64 {
        let sx: f64 = x
            .iter()
            .zip(gx)
            .map(|(&xi, &gi)| {
                let d = (gi / lam).max(-xi);
                d * d
            })
            .sum();
        (sx + gy2 / (lam * lam)).sqrt()
    };
    let mut hi = 2.0 * gnorm / r;
    let mut lo = hi * 0.5;
    for _ in 0..MAX_BRACKET_STEPS {
        if norm_at(lo) >= r {
            break;
        }
        hi = lo;
        lo *= 0.5;
    }
    let mut lam = (lo * hi).sqrt();
    for _ in 0..MAX_BISECTIONS {
        let nm = norm_at(lam);
        if (nm - r).abs() <= tol * r {
            break;
        }
        if nm > r {
            lo = lam;
        } else {
            hi = lam;
        }
        lam = (lo * hi).sqrt();
    }
    let value: f64 = x
        .iter()
        .zip(gx)
        .map(|(&xi, &gi)| gi * (gi / lam).max(-xi))
        .sum::<f64>()
        + gy2 / lam;
    value / r
}

/// Normalized duality gap of `(x, y)` at radius `r`: the largest Lagrangian
/// gap `L(x, ŷ) − L(x̂, y)` over `‖(x̂, ŷ) − (x, y)‖ ≤ r, x̂ ≥ 0`, divided by
/// `r`. Zero exactly at saddle points. Costs two products with `A`.
pub fn normalized_gap(inst: &LpInstance, x: &[f64], y: &[f64], r: f64, tol: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("gap radius must be positive, got {r}")));
    }
    if x.len() != inst.n || y.len() != inst.m {
        return Err(Error::Dimension("normalized_gap: point does not match instance".into()));
    }
    if x.iter().any(|&v| v < 0.0) {
        return Err(Error::Argument("normalized_gap: x must be nonnegative".into()));
    }
    let mut gx = vec![0.0; inst.n];
    let mut gy = vec![0.0; inst.m];
    gradient(inst, x, y, &mut gx, &mut gy);
    Ok(gap_from_gradient(x, &gx, &gy, r, tol))
}
