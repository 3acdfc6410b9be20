use crate::error::{Error, Result};
use crate::instance::LpInstance;

use super::StepSizes;

/// Iterate, running epoch averages and counters.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_avg: Vec<f64>,
    pub y_avg: Vec<f64>,
    /// Steps since the last restart.
    pub inner_count: u64,
    pub epoch_index: u64,
    pub total_iters: u64,
    /// Products with `A` or `Aᵀ` spent so far.
    pub matvecs: u64,
    aty: Vec<f64>,
    ax: Vec<f64>,
    x_prev: Vec<f64>,
}

impl IterateState {
    /// State at `(x, y)` with empty averages.
    pub fn at(x: Vec<f64>, y: Vec<f64>) -> Self {
        let (n, m) = (x.len(), y.len());
        Self {
            x_avg: x.clone(),
            y_avg: y.clone(),
            x,
            y,
            inner_count: 0,
            epoch_index: 0,
            total_iters: 0,
            matvecs: 0,
            aty: vec![0.0; n],
            ax: vec![0.0; m],
            x_prev: vec![0.0; n],
        }
    }

    pub fn origin(m: usize, n: usize) -> Self {
        Self::at(vec![0.0; n], vec![0.0; m])
    }

    /// Starts a new epoch at the current average.
    pub(crate) fn restart_from_average(&mut self) {
        self.x.copy_from_slice(&self.x_avg);
        self.y.copy_from_slice(&self.y_avg);
        self.inner_count = 0;
        self.epoch_index += 1;
    }
}

/// One PDHG step:
///
/// ```text
/// x⁺ = max(0, x − τ(c − Aᵀy))
/// y⁺ = y + σ(b − A(2x⁺ − x))
/// ```
///
/// Uses exactly two products with `A`. The epoch averages absorb the new
/// iterate. Fails with [`Error::Divergence`] if a non-finite value appears.
pub fn one_pdhg(state: &mut IterateState, inst: &LpInstance, steps: StepSizes) -> Result<()> {
    if state.x.len() != inst.n || state.y.len() != inst.m {
        return Err(Error::Dimension(format!(
            "state is ({}, {}), instance is n={}, m={}",
            state.x.len(),
            state.y.len(),
            inst.n,
            inst.m
        )));
    }
    let StepSizes { tau, sigma } = steps;
    inst.a.matvec_t_into(&state.y, &mut state.aty);

    state.x_prev.copy_from_slice(&state.x);
    let mut check = 0.0;
    for ((xi, &ci), &ai) in state.x.iter_mut().zip(&inst.c).zip(&state.aty) {
        let v = *xi - tau * (ci - ai);
        *xi = if v > 0.0 { v } else { 0.0 };
        check += *xi;
    }
    // reuse x_prev as the extrapolation 2x⁺ − x
    for (p, &xn) in state.x_prev.iter_mut().zip(&state.x) {
        *p = 2.0 * xn - *p;
    }
    inst.a.matvec_into(&state.x_prev, &mut state.ax);
    for ((yi, &bi), &ai) in state.y.iter_mut().zip(&inst.b).zip(&state.ax) {
        *yi += sigma * (bi - ai);
        check += *yi;
    }
    state.matvecs += 2;
    state.total_iters += 1;
    state.inner_count += 1;

    let w = 1.0 / state.inner_count as f64;
    if state.inner_count == 1 {
        state.x_avg.copy_from_slice(&state.x);
        state.y_avg.copy_from_slice(&state.y);
    } else {
        for (a, &v) in state.x_avg.iter_mut().zip(&state.x) {
            *a += w * (v - *a);
        }
        for (a, &v) in state.y_avg.iter_mut().zip(&state.y) {
            *a += w * (v - *a);
        }
    }
    if !check.is_finite() {
        return Err(Error::Divergence {
            iteration: state.total_iters,
        });
    }
    Ok(())
}
