//! Seeded batch experiments: instance generation, solves, condition
//! reports, and summary statistics, with CSV and manifest output.

mod output;
pub mod stats;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{
    disparity_phi, generate, GeneratorSpec, LpInstance, MatrixDistribution, SolutionDistribution,
};
use crate::metrics::condition_report;
use crate::parallel::par_map;
use crate::probes::log_grid;
use crate::rng::mix_seed;
use crate::solver::{solve, SolverConfig};

pub use output::{
    format_float, manifest_json, quantiles_csv, runs_csv, slopes_csv, tail_csv, write_outputs,
    OutputFiles, TOOL_NAME,
};
use stats::{loglog_slope, quartiles, tail_curve_counts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Tail,
    Dims,
    Disparity,
    Custom,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "tail" => Ok(Self::Tail),
            "dims" => Ok(Self::Dims),
            "disparity" => Ok(Self::Disparity),
            "custom" => Ok(Self::Custom),
            _ => Err(Error::Argument(format!("unknown preset '{name}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Tail => "tail",
            Self::Dims => "dims",
            Self::Disparity => "disparity",
            Self::Custom => "custom",
        }
    }
}

/// Stage I (basis identification) or Stage II (local convergence).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "I")]
    Basis,
    #[serde(rename = "II")]
    Local,
}

impl Stage {
    pub const BOTH: [Stage; 2] = [Stage::Basis, Stage::Local];

    pub fn label(self) -> &'static str {
        match self {
            Self::Basis => "I",
            Self::Local => "II",
        }
    }
}

/// One grid cell: a family of instances sharing dimensions and solution law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub id: String,
    pub m: usize,
    pub n: usize,
    pub solution: SolutionDistribution,
    pub presolve: bool,
}

impl CellSpec {
    pub fn folded(m: usize, n: usize) -> Self {
        Self {
            id: format!("m{m}_n{n}"),
            m,
            n,
            solution: SolutionDistribution::FoldedGaussian,
            presolve: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub cells: Vec<CellSpec>,
    pub instance_count: usize,
    pub master_seed: u64,
    pub matrix: MatrixDistribution,
    pub solver: SolverConfig,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
    /// `δ` values for tail curves.
    pub delta_grid: Vec<f64>,
    /// Range of the regressor used by the preset's slope fits: `1/δ` for
    /// tail, `n` for dims, `φ_l` for disparity.
    pub fit_range: (f64, f64),
    /// Compute `κ` and `Φ` for every instance.
    pub condition: bool,
    /// Seeds tried per instance before giving up on certification.
    pub max_attempts: u32,
    pub output_dir: Option<PathBuf>,
}

/// Bounds of the default tail `δ` grid. These are a tool choice and are
/// flagged as such in the manifest.
pub const TAIL_DELTA_RANGE: (f64, f64) = (0.005, 0.5);
pub const TAIL_DELTA_POINTS: usize = 41;

impl ExperimentConfig {
    fn base(preset: Preset, cells: Vec<CellSpec>, count: usize, seed: u64) -> Self {
        Self {
            preset,
            cells,
            instance_count: count,
            master_seed: seed,
            matrix: MatrixDistribution::gaussian(),
            solver: SolverConfig::default(),
            threads: 0,
            delta_grid: log_grid(TAIL_DELTA_RANGE.0, TAIL_DELTA_RANGE.1, TAIL_DELTA_POINTS),
            fit_range: (0.0, f64::INFINITY),
            condition: true,
            max_attempts: 100,
            output_dir: None,
        }
    }

    /// Tail study: one cell, stage curves against `1/δ` fitted over
    /// `δ ∈ [0.01, 0.1]`.
    pub fn tail(m: usize, n: usize, count: usize, seed: u64) -> Self {
        let mut cfg = Self::base(Preset::Tail, vec![CellSpec::folded(m, n)], count, seed);
        cfg.fit_range = (10.0, 100.0);
        cfg
    }

    /// Dimension scaling with `m = n/2`; medians fitted against `n ≥ 8`.
    pub fn dims(ns: &[usize], count: usize, seed: u64) -> Self {
        let cells = ns
            .iter()
            .map(|&n| CellSpec {
                id: format!("n{n}"),
                ..CellSpec::folded(n / 2, n)
            })
            .collect();
        let mut cfg = Self::base(Preset::Dims, cells, count, seed);
        let hi = ns.iter().copied().max().unwrap_or(8) as f64;
        cfg.fit_range = (8.0, hi);
        cfg
    }

    /// Disparity family at levels `levels`, `n = 2m`; Stage I medians fitted
    /// against `φ_l` for `l ≤ 6`.
    pub fn disparity(m: usize, levels: &[u32], count: usize, seed: u64) -> Self {
        let cells = levels
            .iter()
            .map(|&l| CellSpec {
                id: format!("l{l}"),
                m,
                n: 2 * m,
                solution: SolutionDistribution::DisparityLevel { level: l },
                presolve: true,
            })
            .collect();
        let mut cfg = Self::base(Preset::Disparity, cells, count, seed);
        cfg.fit_range = (disparity_phi(m, 0), disparity_phi(m, 6));
        cfg
    }

    pub fn custom(cells: Vec<CellSpec>, count: usize, seed: u64) -> Self {
        Self::base(Preset::Custom, cells, count, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Argument(format!("experiment config: {what}")));
        if self.cells.is_empty() {
            return bad("no cells".into());
        }
        if self.instance_count == 0 {
            return bad("instance_count must be at least 1".into());
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1".into());
        }
        for c in &self.cells {
            if c.m == 0 || c.m >= c.n {
                return bad(format!("cell {} needs 1 <= m < n", c.id));
            }
        }
        let mut ids: Vec<&str> = self.cells.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate cell ids".into());
        }
        if self.delta_grid.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return bad("delta grid must lie in (0, 1)".into());
        }
        self.solver.validate()
    }

    fn generator(&self, cell: &CellSpec) -> GeneratorSpec {
        GeneratorSpec {
            m: cell.m,
            n: cell.n,
            matrix: self.matrix,
            solution: cell.solution.clone(),
            presolve: cell.presolve,
            shuffle: false,
        }
    }
}

/// One instance's outcome as written to the runs table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub cell_id: String,
    pub index: usize,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub level: Option<u32>,
    /// Disparity ratio `mean(x*+s*) / min(x*+s*)`.
    pub phi: f64,
    pub kappa: Option<f64>,
    pub phi_big: Option<f64>,
    pub t_basis: Option<u64>,
    pub t_local: Option<u64>,
    /// Iterations run (equal to `t_basis + t_local` when solved).
    pub t_total: u64,
    pub epochs: u64,
    pub final_dist: f64,
    pub solved: bool,
    pub settled: bool,
    /// Seeds rejected before `seed` was accepted.
    pub rejected_seeds: Vec<u64>,
    pub error: Option<String>,
}

impl RunRow {
    pub fn stage(&self, stage: Stage) -> Option<u64> {
        match stage {
            Stage::Basis => self.t_basis,
            Stage::Local => self.t_local,
        }
    }
}

/// Solves one instance and collects its row.
pub fn evaluate_instance(
    cell_id: &str,
    index: usize,
    inst: &LpInstance,
    solver: &SolverConfig,
    condition: bool,
) -> RunRow {
    let u = inst.u();
    let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
    let phi = if min_u > 0.0 {
        u.iter().sum::<f64>() / (u.len() as f64 * min_u)
    } else {
        f64::INFINITY
    };
    let mut row = RunRow {
        cell_id: cell_id.to_string(),
        index,
        seed: inst.seed,
        m: inst.m,
        n: inst.n,
        level: inst.meta.solution.level(),
        phi,
        kappa: None,
        phi_big: None,
        t_basis: None,
        t_local: None,
        t_total: 0,
        epochs: 0,
        final_dist: f64::NAN,
        solved: false,
        settled: false,
        rejected_seeds: Vec::new(),
        error: None,
    };
    if condition {
        let rep = condition_report(inst);
        row.kappa = Some(rep.kappa);
        row.phi_big = Some(rep.phi_big);
    }
    match solve(inst, solver) {
        Ok(rec) => {
            row.t_basis = rec.t_basis;
            row.t_local = rec.t_local;
            row.t_total = rec.total_iters;
            row.epochs = rec.epochs;
            row.final_dist = rec.final_dist;
            row.solved = rec.solved;
            row.settled = rec.settled;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Generates the first certified instance for `(cell, index)`, trying seeds
/// `mix_seed(master, [cell, index, attempt])` in turn. Returns it with the
/// rejected seeds.
pub fn certified_instance(cfg: &ExperimentConfig, cell: usize, index: usize) -> Result<(LpInstance, Vec<u64>)> {
    let spec = cfg.generator(&cfg.cells[cell]);
    let mut rejected = Vec::new();
    for attempt in 0..cfg.max_attempts {
        let seed = mix_seed(cfg.master_seed, &[cell as u64, index as u64, attempt as u64]);
        match generate(&spec, seed) {
            Ok(inst) if inst.meta.certified => return Ok((inst, rejected)),
            Ok(_) | Err(Error::CertificationFailed(_)) => rejected.push(seed),
            Err(e) => return Err(e),
        }
    }
    Err(Error::CertificationFailed(format!(
        "cell {} index {index}: no certified instance in {} attempts",
        cfg.cells[cell].id, cfg.max_attempts
    )))
}

fn run_job(cfg: &ExperimentConfig, cell: usize, index: usize) -> RunRow {
    let spec = &cfg.cells[cell];
    match certified_instance(cfg, cell, index) {
        Ok((inst, rejected)) => {
            let mut row = evaluate_instance(&spec.id, index, &inst, &cfg.solver, cfg.condition);
            row.rejected_seeds = rejected;
            row
        }
        Err(e) => RunRow {
            cell_id: spec.id.clone(),
            index,
            seed: mix_seed(cfg.master_seed, &[cell as u64, index as u64, 0]),
            m: spec.m,
            n: spec.n,
            level: spec.solution.level(),
            phi: f64::NAN,
            kappa: None,
            phi_big: None,
            t_basis: None,
            t_local: None,
            t_total: 0,
            epochs: 0,
            final_dist: f64::NAN,
            solved: false,
            settled: false,
            rejected_seeds: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Regenerates and re-solves the instance with the given cell and seed.
pub fn rerun(cfg: &ExperimentConfig, cell_id: &str, seed: u64) -> Result<RunRow> {
    let cell = cfg
        .cells
        .iter()
        .find(|c| c.id == cell_id)
        .ok_or_else(|| Error::Argument(format!("unknown cell '{cell_id}'")))?;
    let inst = generate(&cfg.generator(cell), seed)?;
    Ok(evaluate_instance(cell_id, 0, &inst, &cfg.solver, cfg.condition))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub stage: Stage,
    pub delta: f64,
    pub iters: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub cell_id: String,
    pub stage: Stage,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub curve: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<RunRow>,
    pub tail_curves: Vec<TailPoint>,
    pub quantile_tables: Vec<QuantileRow>,
    pub slope_fits: Vec<SlopeRow>,
    pub unsolved: usize,
    /// Summaries that could not be computed, with the reason.
    pub notes: Vec<String>,
}

impl ExperimentResult {
    pub fn unsolved_fraction(&self) -> f64 {
        self.unsolved as f64 / self.rows.len().max(1) as f64
    }

    pub fn quantile(&self, cell_id: &str, stage: Stage) -> Option<&QuantileRow> {
        self.quantile_tables
            .iter()
            .find(|q| q.cell_id == cell_id && q.stage == stage)
    }

    pub fn slope(&self, curve: &str) -> Option<&SlopeRow> {
        self.slope_fits.iter().find(|s| s.curve == curve)
    }
}

fn stage_counts<'a>(rows: impl Iterator<Item = &'a RunRow>, stage: Stage) -> Vec<u64> {
    rows.filter(|r| r.solved).filter_map(|r| r.stage(stage)).collect()
}

/// Stage counts needed to cover a `1 − δ` fraction of the runs, per `δ`.
/// Fails if any run is unsolved.
pub fn tail_curve(rows: &[RunRow], stage: Stage, delta_grid: &[f64]) -> Result<Vec<(f64, u64)>> {
    let unsolved: Vec<u64> = rows.iter().filter(|r| !r.solved).map(|r| r.seed).collect();
    if !unsolved.is_empty() {
        return Err(Error::UnsolvedRecords {
            count: unsolved.len(),
            seeds: unsolved,
        });
    }
    tail_curve_counts(&stage_counts(rows.iter(), stage), delta_grid)
}

/// Quartiles of a stage count over the solved runs.
pub fn quantiles(rows: &[RunRow], stage: Stage) -> Result<stats::Quartiles> {
    let v: Vec<f64> = stage_counts(rows.iter(), stage).into_iter().map(|c| c as f64).collect();
    quartiles(&v)
}

fn fit_row(curve: String, points: &[(f64, f64)], range: (f64, f64), notes: &mut Vec<String>) -> Option<SlopeRow> {
    match loglog_slope(points, range) {
        Ok(f) => Some(SlopeRow {
            curve,
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
            fit_lo: range.0,
            fit_hi: range.1,
        }),
        Err(e) => {
            notes.push(format!("{curve}: {e}"));
            None
        }
    }
}

fn summarize(cfg: &ExperimentConfig, rows: &[RunRow]) -> (Vec<TailPoint>, Vec<QuantileRow>, Vec<SlopeRow>, Vec<String>) {
    let mut notes = Vec::new();
    let mut quant = Vec::new();
    for cell in &cfg.cells {
        let cell_rows: Vec<RunRow> = rows.iter().filter(|r| r.cell_id == cell.id).cloned().collect();
        for stage in Stage::BOTH {
            match quantiles(&cell_rows, stage) {
                Ok(q) => quant.push(QuantileRow {
                    cell_id: cell.id.clone(),
                    stage,
                    q25: q.q25,
                    q50: q.q50,
                    q75: q.q75,
                }),
                Err(e) => notes.push(format!("{} stage {}: {e}", cell.id, stage.label())),
            }
        }
    }

    let mut tails = Vec::new();
    let mut slopes = Vec::new();
    let median = |cell: &str, stage: Stage| {
        quant
            .iter()
            .find(|q: &&QuantileRow| q.cell_id == cell && q.stage == stage)
            .map(|q| q.q50)
    };
    match cfg.preset {
        Preset::Tail => {
            let solved: Vec<RunRow> = rows.iter().filter(|r| r.solved).cloned().collect();
            if solved.len() < rows.len() {
                notes.push(format!(
                    "tail curves use the {} solved runs of {}",
                    solved.len(),
                    rows.len()
                ));
            }
            for stage in Stage::BOTH {
                match tail_curve(&solved, stage, &cfg.delta_grid) {
                    Ok(curve) => {
                        let pts: Vec<(f64, f64)> = curve.iter().map(|&(d, it)| (1.0 / d, it as f64)).collect();
                        tails.extend(curve.into_iter().map(|(delta, iters)| TailPoint { stage, delta, iters }));
                        slopes.extend(fit_row(format!("tail_{}", stage.label()), &pts, cfg.fit_range, &mut notes));
                    }
                    Err(e) => notes.push(format!("tail stage {}: {e}", stage.label())),
                }
            }
        }
        Preset::Dims => {
            for stage in Stage::BOTH {
                let pts: Vec<(f64, f64)> = cfg
                    .cells
                    .iter()
                    .filter_map(|c| median(&c.id, stage).map(|q| (c.n as f64, q)))
                    .collect();
                slopes.extend(fit_row(format!("dims_{}", stage.label()), &pts, cfg.fit_range, &mut notes));
            }
        }
        Preset::Disparity => {
            let pts: Vec<(f64, f64)> = cfg
                .cells
                .iter()
                .filter_map(|c| {
                    let l = c.solution.level()?;
                    median(&c.id, Stage::Basis).map(|q| (disparity_phi(c.m, l), q))
                })
                .collect();
            slopes.extend(fit_row("disparity_I".into(), &pts, cfg.fit_range, &mut notes));
        }
        Preset::Custom => {}
    }
    (tails, quant, slopes, notes)
}

/// Runs every `(cell, index)` job on `cfg.threads` workers and summarizes.
/// The rows, and hence the CSV output, do not depend on the worker count.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let per = cfg.instance_count;
    let jobs = cfg.cells.len() * per;
    let rows = par_map(jobs, cfg.threads, |j| run_job(cfg, j / per, j % per));
    let unsolved = rows.iter().filter(|r| !r.solved).count();
    let (tail_curves, quantile_tables, slope_fits, notes) = summarize(cfg, &rows);
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows,
        tail_curves,
        quantile_tables,
        slope_fits,
        unsolved,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(threads: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::dims(&[4, 8], 6, 42);
        cfg.threads = threads;
        cfg
    }

    #[test]
    fn single_instance_batch() {
        let mut cfg = ExperimentConfig::custom(vec![CellSpec::folded(2, 4)], 1, 3);
        cfg.threads = 1;
        let res = run_batch(&cfg).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert!(res.rows[0].solved);
        let csv = runs_csv(&res.rows).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn csv_independent_of_threads() {
        let a = run_batch(&tiny(1)).unwrap();
        let b = run_batch(&tiny(8)).unwrap();
        assert_eq!(runs_csv(&a.rows).unwrap(), runs_csv(&b.rows).unwrap());
        assert_eq!(quantiles_csv(&a.quantile_tables).unwrap(), quantiles_csv(&b.quantile_tables).unwrap());
        assert_eq!(slopes_csv(&a.slope_fits).unwrap(), slopes_csv(&b.slope_fits).unwrap());
    }

    #[test]
    fn rows_are_reproducible_alone() {
        let cfg = tiny(1);
        let res = run_batch(&cfg).unwrap();
        for row in res.rows.iter().step_by(3) {
            let again = rerun(&cfg, &row.cell_id, row.seed).unwrap();
            assert_eq!(runs_csv(&[again]).unwrap(), runs_csv(&[RunRow { index: 0, rejected_seeds: vec![], ..row.clone() }]).unwrap());
        }
    }

    #[test]
    fn stage_additivity() {
        let res = run_batch(&tiny(1)).unwrap();
        for r in res.rows.iter().filter(|r| r.solved) {
            assert_eq!(r.t_basis.unwrap() + r.t_local.unwrap(), r.t_total);
            assert!(r.final_dist <= 1e-4);
        }
    }

    #[test]
    fn tail_curve_rejects_unsolved() {
        let mut rows = run_batch(&tiny(1)).unwrap().rows;
        rows[2].solved = false;
        match tail_curve(&rows, Stage::Basis, &[0.1]) {
            Err(Error::UnsolvedRecords { count, seeds }) => {
                assert_eq!(count, 1);
                assert_eq!(seeds, vec![rows[2].seed]);
            }
            other => panic!("expected unsolved error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny(1);
        cfg.instance_count = 0;
        assert!(run_batch(&cfg).is_err());
        let mut cfg = tiny(1);
        cfg.cells.push(cfg.cells[0].clone());
        assert!(cfg.validate().is_err());
        assert_eq!(Preset::parse("dims").unwrap(), Preset::Dims);
        assert!(Preset::parse("nope").is_err());
    }
}
