use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::{ExperimentResult, QuantileRow, RunRow, SlopeRow, TailPoint, TAIL_DELTA_POINTS, TAIL_DELTA_RANGE};

pub const TOOL_NAME: &str = "pdlab";

const RUNS_HEADER: [&str; 14] = [
    "cell_id", "seed", "m", "n", "l", "phi", "kappa", "Phi", "T_basis", "T_local", "T_total", "epochs",
    "final_dist", "solved",
];

/// `inf`/`-inf`/`nan` for non-finite values, shortest round-trip decimal
/// otherwise, switching to exponent form for very small or large magnitudes.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e15) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Validation(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Validation(format!("csv utf-8: {e}")))
}

pub fn runs_csv(rows: &[RunRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUNS_HEADER)?;
    for r in rows {
        w.write_record([
            r.cell_id.clone(),
            r.seed.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            opt(r.level),
            format_float(r.phi),
            opt(r.kappa.map(format_float)),
            opt(r.phi_big.map(format_float)),
            opt(r.t_basis),
            opt(r.t_local),
            r.t_total.to_string(),
            r.epochs.to_string(),
            format_float(r.final_dist),
            r.solved.to_string(),
        ])?;
    }
    to_string(w)
}

pub fn tail_csv(points: &[TailPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stage", "delta", "iters"])?;
    for p in points {
        w.write_record([p.stage.label().to_string(), format_float(p.delta), p.iters.to_string()])?;
    }
    to_string(w)
}

pub fn quantiles_csv(rows: &[QuantileRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cell_id", "stage", "q25", "q50", "q75"])?;
    for q in rows {
        w.write_record([
            q.cell_id.clone(),
            q.stage.label().to_string(),
            format_float(q.q25),
            format_float(q.q50),
            format_float(q.q75),
        ])?;
    }
    to_string(w)
}

pub fn slopes_csv(rows: &[SlopeRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["curve", "slope", "intercept", "r2", "fit_lo", "fit_hi"])?;
    for s in rows {
        w.write_record([
            s.curve.clone(),
            format_float(s.slope),
            format_float(s.intercept),
            format_float(s.r2),
            format_float(s.fit_lo),
            format_float(s.fit_hi),
        ])?;
    }
    to_string(w)
}

#[derive(Serialize)]
struct Replacement {
    index: usize,
    rejected_seeds: Vec<u64>,
    accepted_seed: u64,
}

#[derive(Serialize)]
struct CellManifest<'a> {
    cell_id: &'a str,
    m: usize,
    n: usize,
    level: Option<u32>,
    seeds: Vec<u64>,
    replacements: Vec<Replacement>,
}

#[derive(Serialize)]
struct DeltaGridNote {
    range: (f64, f64),
    points: usize,
    tool_choice: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a super::ExperimentConfig,
    delta_grid: DeltaGridNote,
    cells: Vec<CellManifest<'a>>,
    runs: usize,
    unsolved: usize,
    unsolved_seeds: Vec<(String, u64)>,
    errors: Vec<(String, u64, String)>,
    notes: &'a [String],
    files: Vec<String>,
}

/// Manifest JSON: configuration, per-cell seed lists with replacements, and
/// unsolved runs. Infinite floats in the configuration become `null`.
pub fn manifest_json(res: &ExperimentResult, files: &[String]) -> Result<String> {
    let cells = res
        .config
        .cells
        .iter()
        .map(|c| {
            let rows: Vec<&RunRow> = res.rows.iter().filter(|r| r.cell_id == c.id).collect();
            CellManifest {
                cell_id: &c.id,
                m: c.m,
                n: c.n,
                level: c.solution.level(),
                seeds: rows.iter().map(|r| r.seed).collect(),
                replacements: rows
                    .iter()
                    .filter(|r| !r.rejected_seeds.is_empty())
                    .map(|r| Replacement {
                        index: r.index,
                        rejected_seeds: r.rejected_seeds.clone(),
                        accepted_seed: r.seed,
                    })
                    .collect(),
            }
        })
        .collect();
    let m = Manifest {
        tool: TOOL_NAME,
        version: env!("CARGO_PKG_VERSION"),
        config: &res.config,
        delta_grid: DeltaGridNote {
            range: TAIL_DELTA_RANGE,
            points: TAIL_DELTA_POINTS,
            tool_choice: true,
        },
        cells,
        runs: res.rows.len(),
        unsolved: res.unsolved,
        unsolved_seeds: res
            .rows
            .iter()
            .filter(|r| !r.solved)
            .map(|r| (r.cell_id.clone(), r.seed))
            .collect(),
        errors: res
            .rows
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| (r.cell_id.clone(), r.seed, e.clone())))
            .collect(),
        notes: &res.notes,
        files: files.to_vec(),
    };
    serde_json::to_string_pretty(&m).map_err(|e| Error::Validation(format!("manifest: {e}")))
}

/// Paths written by [`write_outputs`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub runs: PathBuf,
    pub tail: PathBuf,
    pub quantiles: PathBuf,
    pub slopes: PathBuf,
    pub manifest: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `runs.csv`, `tail.csv`, `quantiles.csv`, `slopes.csv` and
/// `manifest.json` into `dir`, creating it if needed.
pub fn write_outputs(res: &ExperimentResult, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles {
        runs: dir.join("runs.csv"),
        tail: dir.join("tail.csv"),
        quantiles: dir.join("quantiles.csv"),
        slopes: dir.join("slopes.csv"),
        manifest: dir.join("manifest.json"),
    };
    write(&files.runs, &runs_csv(&res.rows)?)?;
    write(&files.tail, &tail_csv(&res.tail_curves)?)?;
    write(&files.quantiles, &quantiles_csv(&res.quantile_tables)?)?;
    write(&files.slopes, &slopes_csv(&res.slope_fits)?)?;
    let names: Vec<String> = ["runs.csv", "tail.csv", "quantiles.csv", "slopes.csv"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write(&files.manifest, &manifest_json(res, &names)?)?;
    Ok(files)
}
