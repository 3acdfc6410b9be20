use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::LpInstance;
use crate::linalg::{dot, norm2, spectral_extremes};
use crate::metrics::detect_stages;

use super::gap::{gap_from_gradient, gradient};
use super::pdhg::{one_pdhg, IterateState};
use super::{RunRecord, SolverConfig, StepSizes, StopRule};

/// A triggered restart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartEvent {
    pub iter: u64,
    /// Gap of the epoch average that triggered the restart.
    pub g_avg: f64,
    /// Gap of the epoch start it was compared against.
    pub g_ref: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Running,
    Restarted,
    Solved,
    /// `max_iters` reached without meeting the stopping rule.
    Exhausted,
}

const DIVERGENCE_FACTOR: f64 = 1e12;

/// Restarted PDHG driven one step at a time.
pub struct Rpdhg<'a> {
    inst: &'a LpInstance,
    cfg: SolverConfig,
    steps: StepSizes,
    state: IterateState,
    start_x: Vec<f64>,
    start_y: Vec<f64>,
    /// Gap of the epoch start; `None` in the first epoch, whose reference is
    /// re-evaluated at the origin with the current radius.
    g_ref: Option<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    diff_x: Vec<f64>,
    diff_y: Vec<f64>,
    in_support: Vec<bool>,
    support_trace: Vec<(u64, Vec<usize>)>,
    dist_trace: Vec<(u64, f64)>,
    restarts: Vec<RestartEvent>,
    gap_checks: u64,
    extra_matvecs: u64,
    opt_norm: f64,
    last_dist: f64,
    outcome: Option<StepOutcome>,
}

impl<'a> Rpdhg<'a> {
    pub fn new(inst: &'a LpInstance, cfg: SolverConfig, steps: StepSizes) -> Result<Self> {
        cfg.validate()?;
        inst.validate()?;
        let (m, n) = (inst.m, inst.n);
        let opt_norm = (dot(&inst.x_star, &inst.x_star) + dot(&inst.y_star, &inst.y_star)).sqrt();
        let mut run = Self {
            inst,
            cfg,
            steps,
            state: IterateState::origin(m, n),
            start_x: vec![0.0; n],
            start_y: vec![0.0; m],
            g_ref: None,
            gx: vec![0.0; n],
            gy: vec![0.0; m],
            diff_x: vec![0.0; n],
            diff_y: vec![0.0; m],
            in_support: vec![false; n],
            support_trace: vec![(0, Vec::new())],
            dist_trace: Vec::new(),
            restarts: Vec::new(),
            gap_checks: 0,
            extra_matvecs: 0,
            opt_norm,
            last_dist: f64::INFINITY,
            outcome: None,
        };
        let d = run.distance();
        run.last_dist = d;
        run.dist_trace.push((0, d));
        if run.cfg.stop == StopRule::Distance && d <= run.cfg.dist_tol {
            run.outcome = Some(StepOutcome::Solved);
        }
        Ok(run)
    }

    pub fn state(&self) -> &IterateState {
        &self.state
    }

    pub fn steps(&self) -> StepSizes {
        self.steps
    }

    pub fn restarts(&self) -> &[RestartEvent] {
        &self.restarts
    }

    /// Distance of the current iterate to `(x*, y*)`.
    fn distance(&self) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.state.x.iter().zip(&self.inst.x_star) {
            s += (a - b) * (a - b);
        }
        for (a, b) in self.state.y.iter().zip(&self.inst.y_star) {
            s += (a - b) * (a - b);
        }
        s.sqrt()
    }

    fn check_divergence(&self) -> Result<()> {
        let norm = (dot(&self.state.x, &self.state.x) + dot(&self.state.y, &self.state.y)).sqrt();
        if !(norm <= DIVERGENCE_FACTOR * (1.0 + self.opt_norm)) {
            return Err(Error::Divergence {
                iteration: self.state.total_iters,
            });
        }
        Ok(())
    }

    /// Records the support if it changed, replacing an entry already made at
    /// the current iteration.
    fn trace_support(&mut self) {
        let t = self.state.total_iters;
        let changed = self
            .state
            .x
            .iter()
            .zip(&self.in_support)
            .any(|(&v, &s)| (v > 0.0) != s);
        if !changed {
            return;
        }
        for (s, &v) in self.in_support.iter_mut().zip(&self.state.x) {
            *s = v > 0.0;
        }
        let support: Vec<usize> = (0..self.inst.n).filter(|&j| self.in_support[j]).collect();
        match self.support_trace.last_mut() {
            Some(last) if last.0 == t => last.1 = support,
            _ => self.support_trace.push((t, support)),
        }
    }

    fn trace_distance(&mut self, d: f64, force: bool) {
        let t = self.state.total_iters;
        if !force && t % self.cfg.trace_stride != 0 {
            return;
        }
        match self.dist_trace.last_mut() {
            Some(last) if last.0 == t => last.1 = d,
            _ => self.dist_trace.push((t, d)),
        }
    }

    /// Normalized gap at `(x, y)` with radius `r`; two products with `A`.
    fn gap_at(&mut self, use_avg: bool, r: f64) -> f64 {
        let (x, y) = if use_avg {
            (&self.state.x_avg, &self.state.y_avg)
        } else {
            (&self.state.x, &self.state.y)
        };
        gradient(self.inst, x, y, &mut self.gx, &mut self.gy);
        self.extra_matvecs += 2;
        gap_from_gradient(x, &self.gx, &self.gy, r, self.cfg.gap_bisect_tol)
    }

    /// Gap at the origin, where the gradient is `(−c, b)` and needs no product.
    fn gap_at_origin(&mut self, r: f64) -> f64 {
        for (g, &c) in self.gx.iter_mut().zip(&self.inst.c) {
            *g = -c;
        }
        self.gy.copy_from_slice(&self.inst.b);
        gap_from_gradient(&self.start_x, &self.gx, &self.gy, r, self.cfg.gap_bisect_tol)
    }

    /// Restart test on the epoch average. Returns whether a restart happened.
    fn restart_check(&mut self) -> bool {
        for ((d, &a), &s) in self.diff_x.iter_mut().zip(&self.state.x_avg).zip(&self.start_x) {
            *d = a - s;
        }
        for ((d, &a), &s) in self.diff_y.iter_mut().zip(&self.state.y_avg).zip(&self.start_y) {
            *d = a - s;
        }
        let mut r = (dot(&self.diff_x, &self.diff_x) + dot(&self.diff_y, &self.diff_y)).sqrt();
        let g_ref = match self.g_ref {
            Some(g) => {
                if r == 0.0 {
                    return false;
                }
                g
            }
            None => {
                if r == 0.0 {
                    r = 1.0;
                }
                self.gap_at_origin(r)
            }
        };
        self.gap_checks += 1;
        let g_avg = self.gap_at(true, r);
        if g_avg > self.cfg.beta * g_ref {
            return false;
        }
        self.restarts.push(RestartEvent {
            iter: self.state.total_iters,
            g_avg,
            g_ref,
        });
        self.state.restart_from_average();
        self.start_x.copy_from_slice(&self.state.x);
        self.start_y.copy_from_slice(&self.state.y);
        self.g_ref = Some(g_avg);
        true
    }

    /// Largest of relative primal infeasibility, dual infeasibility and
    /// duality gap at the current iterate; two products with `A`.
    fn kkt_error(&mut self) -> f64 {
        let inst = self.inst;
        inst.a.matvec_into(&self.state.x, &mut self.gy);
        inst.a.matvec_t_into(&self.state.y, &mut self.gx);
        self.extra_matvecs += 2;
        let primal: f64 = self
            .gy
            .iter()
            .zip(&inst.b)
            .map(|(ax, b)| (ax - b) * (ax - b))
            .sum::<f64>()
            .sqrt()
            / (1.0 + norm2(&inst.b));
        let dual: f64 = self
            .gx
            .iter()
            .zip(&inst.c)
            .map(|(aty, c)| (aty - c).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
            / (1.0 + norm2(&inst.c));
        let pobj = dot(&inst.c, &self.state.x);
        let dobj = dot(&inst.b, &self.state.y);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        primal.max(dual).max(gap)
    }

    /// Advances one PDHG step, then applies the stopping and restart tests.
    pub fn step(&mut self) -> Result<StepOutcome> {
        if let Some(done) = self.outcome {
            return Ok(done);
        }
        one_pdhg(&mut self.state, self.inst, self.steps)?;
        let on_stride = self.state.total_iters % self.cfg.trace_stride == 0;
        if on_stride {
            self.trace_support();
        }
        let d = self.distance();
        self.last_dist = d;
        // ‖z‖ ≤ d + ‖z*‖, so the full norm is only needed near the threshold
        if !(d + self.opt_norm <= DIVERGENCE_FACTOR * (1.0 + self.opt_norm)) {
            self.check_divergence()?;
        }
        match self.cfg.stop {
            StopRule::Distance => {
                if d <= self.cfg.dist_tol {
                    self.trace_support();
                    self.trace_distance(d, true);
                    return Ok(self.finish_with(StepOutcome::Solved));
                }
                self.trace_distance(d, false);
            }
            StopRule::Kkt { tol } => {
                self.trace_distance(d, false);
                if self.state.inner_count % self.cfg.check_period == 0 && self.kkt_error() <= tol {
                    self.trace_support();
                    self.trace_distance(d, true);
                    return Ok(self.finish_with(StepOutcome::Solved));
                }
            }
        }

        let mut outcome = StepOutcome::Running;
        if self.state.inner_count % self.cfg.check_period == 0 && self.restart_check() {
            outcome = StepOutcome::Restarted;
            let d = self.distance();
            self.last_dist = d;
            if on_stride {
                self.trace_support();
                self.trace_distance(d, false);
            }
            if self.cfg.stop == StopRule::Distance && d <= self.cfg.dist_tol {
                self.trace_support();
                self.trace_distance(d, true);
                return Ok(self.finish_with(StepOutcome::Solved));
            }
        }
        if self.state.total_iters >= self.cfg.max_iters {
            self.trace_support();
            self.trace_distance(self.last_dist, true);
            return Ok(self.finish_with(StepOutcome::Exhausted));
        }
        Ok(outcome)
    }

    fn finish_with(&mut self, outcome: StepOutcome) -> StepOutcome {
        self.outcome = Some(outcome);
        outcome
    }

    /// Runs until solved or out of iterations.
    pub fn run(&mut self) -> Result<()> {
        while matches!(self.step()?, StepOutcome::Running | StepOutcome::Restarted) {}
        Ok(())
    }

    /// Builds the run record; stages are filled in for solved runs on
    /// certified instances under the distance rule.
    pub fn finish(self) -> RunRecord {
        let solved = self.outcome == Some(StepOutcome::Solved);
        let mut rec = RunRecord {
            solved,
            total_iters: self.state.total_iters,
            t_basis: None,
            t_local: None,
            settled: false,
            final_dist: self.last_dist,
            epochs: self.state.epoch_index + 1,
            steps: self.steps,
            support_trace: self.support_trace,
            dist_trace: self.dist_trace,
            restarts: self.restarts,
            matvecs: self.state.matvecs + self.extra_matvecs,
            gap_checks: self.gap_checks,
        };
        if solved && self.inst.meta.certified && self.cfg.stop == StopRule::Distance {
            if let Ok(st) = detect_stages(
                &rec.support_trace,
                &rec.dist_trace,
                &self.inst.basis,
                self.cfg.dist_tol,
            ) {
                rec.t_basis = Some(st.t_basis);
                rec.t_local = Some(st.t_local);
                rec.settled = st.settled;
            }
        }
        rec
    }
}

/// Solves with the default step sizes `τ = λ_min/(2λ_max)`,
/// `σ = 1/(2λ_minλ_max)` from the extreme nonzero singular values of `A`.
pub fn solve(inst: &LpInstance, cfg: &SolverConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let ext = spectral_extremes(&inst.a, cfg.spectral_rel_tol)?;
    solve_with_steps(inst, cfg, StepSizes::from_extremes(&ext))
}

pub fn solve_with_steps(inst: &LpInstance, cfg: &SolverConfig, steps: StepSizes) -> Result<RunRecord> {
    let mut run = Rpdhg::new(inst, cfg.clone(), steps)?;
    run.run()?;
    Ok(run.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{assemble, generate, GeneratorSpec, MatrixDistribution, SolutionDistribution};
    use crate::linalg::DenseMatrix;
    use crate::probes::brute_force_lp;

    #[test]
    fn start_within_tolerance() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, -1.0]]).unwrap();
        let inst = assemble(
            a,
            vec![1e-6, 0.0, 0.0],
            vec![0.0, 1e-6, 1e-6],
            false,
            0,
            MatrixDistribution::gaussian(),
            SolutionDistribution::FixedVector { values: vec![1e-6; 3] },
        )
        .unwrap();
        let rec = solve(&inst, &SolverConfig::default()).unwrap();
        assert!(rec.solved);
        assert_eq!(rec.total_iters, 0);
        assert_eq!((rec.t_basis, rec.t_local), (Some(0), Some(0)));
    }

    #[test]
    fn solves_and_accounts() {
        for seed in 0..5 {
            let inst = generate(&GeneratorSpec::gaussian(8, 16), seed).unwrap();
            let cfg = SolverConfig::default();
            let rec = solve(&inst, &cfg).unwrap();
            assert!(rec.solved, "seed {seed}");
            assert!(rec.final_dist <= cfg.dist_tol);
            assert_eq!(rec.t_basis.unwrap() + rec.t_local.unwrap(), rec.total_iters);
            assert_eq!(rec.matvecs, 2 * rec.total_iters + 2 * rec.gap_checks);
            assert_eq!(rec.epochs, rec.restarts.len() as u64 + 1);
            for ev in &rec.restarts {
                assert!(ev.g_avg <= cfg.beta * ev.g_ref, "{ev:?}");
                assert_eq!(ev.iter % cfg.check_period, 0);
            }
            assert!(rec.steps.is_admissible(spectral_extremes(&inst.a, 1e-6).unwrap().sigma_max));
        }
    }

    #[test]
    fn iterates_stay_nonnegative() {
        let inst = generate(&GeneratorSpec::gaussian(5, 12), 3).unwrap();
        let ext = spectral_extremes(&inst.a, 1e-6).unwrap();
        let mut run = Rpdhg::new(&inst, SolverConfig::default(), StepSizes::from_extremes(&ext)).unwrap();
        while matches!(run.step().unwrap(), StepOutcome::Running | StepOutcome::Restarted) {
            assert!(run.state().x.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn matches_vertex_enumeration() {
        for seed in 0..30 {
            let m = 1 + seed as usize % 3;
            let inst = generate(&GeneratorSpec::gaussian(m, m + 1 + seed as usize % 3), seed).unwrap();
            let oracle = brute_force_lp(&inst).unwrap();
            let ext = spectral_extremes(&inst.a, 1e-6).unwrap();
            let mut run = Rpdhg::new(&inst, SolverConfig::default(), StepSizes::from_extremes(&ext)).unwrap();
            run.run().unwrap();
            let st = run.state();
            let d: f64 = st
                .x
                .iter()
                .zip(&oracle.x)
                .chain(st.y.iter().zip(&oracle.y))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(d <= 1e-3, "seed {seed}: {d}");
        }
    }

    #[test]
    fn iteration_cap_leaves_unsolved() {
        let inst = generate(&GeneratorSpec::gaussian(10, 20), 1).unwrap();
        let cfg = SolverConfig {
            max_iters: 5,
            ..SolverConfig::default()
        };
        let rec = solve(&inst, &cfg).unwrap();
        assert!(!rec.solved);
        assert_eq!(rec.total_iters, 5);
        assert_eq!(rec.t_basis, None);
        assert_eq!(rec.dist_trace.last().unwrap().0, 5);
    }

    #[test]
    fn kkt_rule_terminates() {
        let inst = generate(&GeneratorSpec::gaussian(6, 14), 4).unwrap();
        let cfg = SolverConfig {
            stop: StopRule::Kkt { tol: 1e-7 },
            ..SolverConfig::default()
        };
        let rec = solve(&inst, &cfg).unwrap();
        assert!(rec.solved);
        assert!(rec.final_dist < 1e-3);
        assert_eq!(rec.t_basis, None);
    }

    #[test]
    fn traces_are_consistent() {
        let inst = generate(&GeneratorSpec::gaussian(6, 12), 8).unwrap();
        let cfg = SolverConfig {
            trace_stride: 7,
            ..SolverConfig::default()
        };
        let rec = solve(&inst, &cfg).unwrap();
        assert!(rec.solved);
        let (last_t, last_d) = *rec.dist_trace.last().unwrap();
        assert_eq!(last_t, rec.total_iters);
        assert!(last_d <= cfg.dist_tol);
        assert!(rec.dist_trace[..rec.dist_trace.len() - 1].iter().all(|&(t, d)| t % 7 == 0 && d > cfg.dist_tol));
        if rec.settled {
            assert_eq!(rec.support_trace.last().unwrap().1, inst.basis);
        }
    }
}
