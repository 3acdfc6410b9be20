//! Restarted PDHG for `min cᵀx s.t. Ax = b, x ≥ 0`.
//!
//! One step ([`one_pdhg`]) is a projected primal gradient step followed by an
//! extrapolated dual step. The driver ([`solve`]) averages iterates within an
//! epoch and restarts from the average when its normalized duality gap has
//! dropped to a `β` fraction of the epoch start's gap.

mod gap;
mod pdhg;
mod rpdhg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SpectralExtremes;

pub use gap::{gap_from_gradient, normalized_gap};
pub use pdhg::{one_pdhg, IterateState};
pub use rpdhg::{solve, solve_with_steps, RestartEvent, Rpdhg, StepOutcome};

/// Primal and dual step sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub tau: f64,
    pub sigma: f64,
}

impl StepSizes {
    pub fn new(tau: f64, sigma: f64) -> Result<Self> {
        if !(tau > 0.0 && sigma > 0.0 && tau.is_finite() && sigma.is_finite()) {
            return Err(Error::Argument(format!(
                "step sizes must be positive and finite, got tau={tau}, sigma={sigma}"
            )));
        }
        Ok(Self { tau, sigma })
    }

    /// `τ = λ_min / (2 λ_max)`, `σ = 1 / (2 λ_min λ_max)`, so that
    /// `τ σ λ_max² = 1/4`.
    pub fn from_extremes(ext: &SpectralExtremes) -> Self {
        let (hi, lo) = (ext.sigma_max, ext.sigma_min_nonzero);
        Self {
            tau: lo / (2.0 * hi),
            sigma: 1.0 / (2.0 * lo * hi),
        }
    }

    /// `τ σ ‖A‖² ≤ 1/4` up to roundoff.
    pub fn is_admissible(&self, sigma_max: f64) -> bool {
        self.tau * self.sigma * sigma_max * sigma_max <= 0.25 + 1e-9
    }
}

/// Termination test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopRule {
    /// `‖(x, y) − (x*, y*)‖ ≤ dist_tol`, checked after every step.
    Distance,
    /// Largest of relative primal infeasibility, dual infeasibility and
    /// duality gap at most `tol`, checked at the restart cadence. For
    /// instances without a trusted optimum.
    Kkt { tol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Restart when the average's gap is at most `beta` times the start's.
    pub beta: f64,
    /// Inner iterations between restart checks.
    pub check_period: u64,
    pub dist_tol: f64,
    pub max_iters: u64,
    pub spectral_rel_tol: f64,
    /// Relative tolerance on the ball constraint in the gap bisection.
    pub gap_bisect_tol: f64,
    /// Support and distance are traced every `trace_stride` iterations.
    pub trace_stride: u64,
    pub stop: StopRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: (-1f64).exp(),
            check_period: 64,
            dist_tol: 1e-4,
            max_iters: 10_000_000,
            spectral_rel_tol: 1e-6,
            gap_bisect_tol: 1e-9,
            trace_stride: 1,
            stop: StopRule::Distance,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Argument(format!("solver config: {what}")));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if self.check_period == 0 || self.trace_stride == 0 || self.max_iters == 0 {
            return bad("check_period, trace_stride and max_iters must be positive");
        }
        if !(self.dist_tol > 0.0 && self.gap_bisect_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.spectral_rel_tol > 0.0 && self.spectral_rel_tol <= 1e-2) {
            return bad("spectral_rel_tol must lie in (0, 1e-2]");
        }
        if let StopRule::Kkt { tol } = self.stop {
            if !(tol > 0.0) {
                return bad("KKT tolerance must be positive");
            }
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solved: bool,
    pub total_iters: u64,
    /// Stage I length; `None` when unsolved or the instance is uncertified.
    pub t_basis: Option<u64>,
    /// Stage II length.
    pub t_local: Option<u64>,
    /// Support settled on the optimal basis before termination.
    pub settled: bool,
    pub final_dist: f64,
    /// Number of epochs started (restarts + 1).
    pub epochs: u64,
    pub steps: StepSizes,
    /// Support of `x` at the traced iterations where it changed, starting at
    /// iteration 0.
    pub support_trace: Vec<(u64, Vec<usize>)>,
    /// Distance to the optimum every `trace_stride` iterations plus the final
    /// iteration.
    pub dist_trace: Vec<(u64, f64)>,
    pub restarts: Vec<RestartEvent>,
    /// Products with `A` or `Aᵀ`.
    pub matvecs: u64,
    pub gap_checks: u64,
}
