//! `pdlab`: generate, solve and analyze random LPs, run tail probes, and run
//! batch experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdlab_core::harness::{
    self, evaluate_instance, format_float, run_batch, write_outputs, CellSpec, ExperimentConfig, TOOL_NAME,
};
use pdlab_core::instance::{export_mps, generate, load_instance, save_instance, GeneratorSpec};
use pdlab_core::metrics::{condition_report, verify_bound_chain};
use pdlab_core::probes::{self, log_grid, TailProbeResult};
use pdlab_core::solver::{solve, StopRule};
use pdlab_core::{Error, MatrixDistribution, MatrixKind, SolutionDistribution, SolverConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "pdlab", version, about = "Restarted PDHG laboratory for random standard-form LPs")]
struct Cli {
    /// Worker threads (0 = all available cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance with a certified unique optimum.
    Generate(GenerateArgs),
    /// Solve an instance file with rPDHG.
    Solve(SolveArgs),
    /// Print the condition report of an instance file.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo tail probes.
    Probe {
        #[command(subcommand)]
        which: ProbeCommand,
    },
    /// Batch experiments.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Gaussian,
    Rademacher,
    Uniform,
}

impl DistArg {
    fn dist(self) -> MatrixDistribution {
        MatrixDistribution::new(match self {
            Self::Gaussian => MatrixKind::Gaussian,
            Self::Rademacher => MatrixKind::Rademacher,
            Self::Uniform => MatrixKind::UniformUnitVar,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolutionArg {
    FoldedGaussian,
    Disparity,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 10_000_000)]
    max_iters: u64,
    #[arg(long, default_value_t = 1e-4)]
    dist_tol: f64,
    #[arg(long, default_value_t = 64)]
    check_period: u64,
    /// Restart factor (default 1/e).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trace_stride: u64,
    /// Stop on relative KKT error instead of distance to the known optimum.
    #[arg(long)]
    kkt_tol: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig {
            max_iters: self.max_iters,
            dist_tol: self.dist_tol,
            check_period: self.check_period,
            trace_stride: self.trace_stride,
            ..SolverConfig::default()
        };
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(tol) = self.kkt_tol {
            cfg.stop = StopRule::Kkt { tol };
        }
        cfg
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: DistArg,
    #[arg(long, value_enum, default_value = "folded-gaussian")]
    solution: SolutionArg,
    /// Disparity level `l` (with `--solution disparity`).
    #[arg(long, default_value_t = 0)]
    level: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace `c` by its projection onto the null space of `A`.
    #[arg(long)]
    presolve: bool,
    /// Randomly permute the columns.
    #[arg(long)]
    shuffle: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the instance in fixed MPS format.
    #[arg(long)]
    mps: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// One-row run table.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Full run record (traces, restarts) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the condition report in the CSV row.
    #[arg(long)]
    no_condition: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeCommon {
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: DistArg,
    /// CSV with one row per threshold.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ProbeCommand {
    /// Frequency of σ₁(A) ≥ 5σ_A√n.
    SigmaMax {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: ProbeCommon,
    },
    /// Frequency of σ_m(A) ≤ ε(√n − √(m−1)) over an ε grid.
    SigmaMin {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.03, 0.1, 0.3, 1.0])]
        eps: Vec<f64>,
        #[command(flatten)]
        common: ProbeCommon,
    },
    /// Quantiles of κ(A).
    Kappa {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: ProbeCommon,
    },
    /// Frequency of ‖u‖₁/min u ≥ t for folded-Gaussian u.
    Phi {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e2)]
        t_min: f64,
        #[arg(long, default_value_t = 1e6)]
        t_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[command(flatten)]
        common: ProbeCommon,
    },
}

#[derive(Args)]
struct ExperimentCommon {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: DistArg,
    /// Skip κ and Φ for each instance.
    #[arg(long)]
    no_condition: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Stage tail curves for one size.
    Tail {
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[command(flatten)]
        common: ExperimentCommon,
    },
    /// Median stage counts against n with m = n/2.
    Dims {
        #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 8, 16, 32, 64, 128, 256])]
        ns: Vec<usize>,
        /// Drop sizes above this n.
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[command(flatten)]
        common: ExperimentCommon,
    },
    /// Median Stage I count against the disparity ratio.
    Disparity {
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, value_delimiter = ',', default_values_t = (0u32..=10).collect::<Vec<_>>())]
        levels: Vec<u32>,
        /// Drop levels above this one.
        #[arg(long)]
        max_level: Option<u32>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[command(flatten)]
        common: ExperimentCommon,
    },
    /// Folded-Gaussian cells given as MxN pairs.
    Custom {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<String>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Keep the original objective instead of presolving.
        #[arg(long)]
        no_presolve: bool,
        #[command(flatten)]
        common: ExperimentCommon,
    },
}

/// Failure class, mapped to the exit code.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn json_err(e: serde_json::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Writes `<path>.manifest.json` describing a single-output command.
fn write_manifest(path: &Path, command: &str, config: serde_json::Value) -> CliResult<()> {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    let manifest = json!({
        "tool": TOOL_NAME,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "output": path.display().to_string(),
    });
    write_file(Path::new(&name), &serde_json::to_string_pretty(&manifest).map_err(json_err)?)
}

fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let solution = match a.solution {
        SolutionArg::FoldedGaussian => SolutionDistribution::FoldedGaussian,
        SolutionArg::Disparity => SolutionDistribution::DisparityLevel { level: a.level },
    };
    let spec = GeneratorSpec {
        m: a.m,
        n: a.n,
        matrix: a.dist.dist(),
        solution,
        presolve: a.presolve,
        shuffle: a.shuffle,
    };
    let inst = generate(&spec, a.seed)?;
    save_instance(&inst, &a.out)?;
    if let Some(mps) = &a.mps {
        write_file(mps, &export_mps(&inst, "PDLAB"))?;
    }
    write_manifest(&a.out, "generate", json!({ "spec": spec, "seed": a.seed }))?;
    println!(
        "wrote {} (m={}, n={}, certified={}, basis rcond {:.3e})",
        a.out.display(),
        inst.m,
        inst.n,
        inst.meta.certified,
        inst.meta.basis_rcond
    );
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> CliResult<()> {
    let inst = load_instance(&a.instance)?;
    let cfg = a.solver.config();
    cfg.validate()?;
    if let Some(out) = &a.out {
        let rec = solve(&inst, &cfg)?;
        write_file(out, &serde_json::to_string_pretty(&rec).map_err(json_err)?)?;
        write_manifest(out, "solve", json!({ "instance": a.instance, "solver": cfg }))?;
    }
    let row = evaluate_instance("single", 0, &inst, &cfg, !a.no_condition);
    if let Some(e) = &row.error {
        return Err(Failure::Runtime(e.clone()));
    }
    if let Some(csv) = &a.csv {
        write_file(csv, &harness::runs_csv(std::slice::from_ref(&row))?)?;
        write_manifest(csv, "solve", json!({ "instance": a.instance, "solver": cfg, "seed": inst.seed }))?;
    }
    println!(
        "solved={} iters={} T_basis={} T_local={} epochs={} final_dist={}",
        row.solved,
        row.t_total,
        row.t_basis.map_or("-".into(), |t| t.to_string()),
        row.t_local.map_or("-".into(), |t| t.to_string()),
        row.epochs,
        format_float(row.final_dist)
    );
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let inst = load_instance(&a.instance)?;
    let rep = condition_report(&inst);
    let body = json!({
        "report": rep,
        "phi_raw": rep.phi_raw(),
        "bound_z": rep.bound_z(),
        "bound_chain_holds": verify_bound_chain(&rep),
    });
    let text = serde_json::to_string_pretty(&body).map_err(json_err)?;
    match &a.out {
        Some(p) => {
            write_file(p, &text)?;
            write_manifest(p, "analyze", json!({ "instance": a.instance }))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn probe_csv(results: &[TailProbeResult]) -> String {
    let mut s = String::from("threshold,trials,exceed_count,empirical_rate,bound_rate\n");
    for r in results {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(r.threshold),
            r.trials,
            r.exceed_count,
            format_float(r.empirical_rate),
            r.bound_rate.map(format_float).unwrap_or_default()
        ));
    }
    s
}

fn cmd_probe(which: &ProbeCommand, threads: usize) -> CliResult<()> {
    let (text, common, config) = match which {
        ProbeCommand::SigmaMax { m, n, common } => {
            let r = probes::probe_sigma_max(*m, *n, &common.dist.dist(), common.trials, common.seed, threads)?;
            (probe_csv(&[r]), common, json!({ "probe": "sigma_max", "m": m, "n": n }))
        }
        ProbeCommand::SigmaMin { m, n, eps, common } => {
            let r = probes::probe_sigma_min(*m, *n, &common.dist.dist(), common.trials, eps, common.seed, threads)?;
            (probe_csv(&r), common, json!({ "probe": "sigma_min", "m": m, "n": n, "eps": eps }))
        }
        ProbeCommand::Kappa { m, n, common } => {
            let q = probes::probe_kappa(*m, *n, &common.dist.dist(), common.trials, common.seed, threads)?;
            let text = format!(
                "m,n,trials,q50,q90,q99\n{},{},{},{},{},{}\n",
                q.m,
                q.n,
                q.trials,
                format_float(q.q50),
                format_float(q.q90),
                format_float(q.q99)
            );
            (text, common, json!({ "probe": "kappa", "m": m, "n": n }))
        }
        ProbeCommand::Phi { n, t_min, t_max, points, common } => {
            if !(*t_min > 0.0 && t_max > t_min && *points >= 1) {
                return Err(Failure::Usage("need 0 < t-min < t-max and points >= 1".into()));
            }
            let grid = log_grid(*t_min, *t_max, *points);
            let r = probes::probe_phi(*n, common.trials, &grid, common.seed, threads)?;
            let mut text = probe_csv(&r);
            if let Ok(fit) = probes::fit_tail_decay(&r, 0.2, 20) {
                eprintln!("decay slope {:.3} (r2 {:.3}, {} points)", fit.slope, fit.r2, fit.points);
            }
            if text.is_empty() {
                text.push('\n');
            }
            (text, common, json!({ "probe": "phi", "n": n, "t_grid": grid }))
        }
    };
    match &common.out {
        Some(p) => {
            write_file(p, &text)?;
            let cfg = json!({ "probe": config, "trials": common.trials, "seed": common.seed });
            write_manifest(p, "probe", cfg)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_size(s: &str) -> CliResult<(usize, usize)> {
    let bad = || Failure::Usage(format!("size '{s}' is not of the form MxN"));
    let (m, n) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((m.trim().parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?))
}

fn cmd_experiment(which: &ExperimentCommand, threads: usize) -> CliResult<()> {
    let (mut cfg, common) = match which {
        ExperimentCommand::Tail { m, n, count, common } => (ExperimentConfig::tail(*m, *n, *count, common.seed), common),
        ExperimentCommand::Dims { ns, max_n, count, common } => {
            let ns: Vec<usize> = ns.iter().copied().filter(|&n| max_n.is_none_or(|c| n <= c)).collect();
            (ExperimentConfig::dims(&ns, *count, common.seed), common)
        }
        ExperimentCommand::Disparity { m, levels, max_level, count, common } => {
            let levels: Vec<u32> = levels.iter().copied().filter(|&l| max_level.is_none_or(|c| l <= c)).collect();
            (ExperimentConfig::disparity(*m, &levels, *count, common.seed), common)
        }
        ExperimentCommand::Custom { sizes, count, no_presolve, common } => {
            let cells = sizes
                .iter()
                .map(|s| {
                    let (m, n) = parse_size(s)?;
                    Ok(CellSpec { presolve: !no_presolve, ..CellSpec::folded(m, n) })
                })
                .collect::<CliResult<Vec<_>>>()?;
            (ExperimentConfig::custom(cells, *count, common.seed), common)
        }
    };
    cfg.threads = threads;
    cfg.matrix = common.dist.dist();
    cfg.solver = common.solver.config();
    cfg.condition = !common.no_condition;
    cfg.output_dir = Some(common.out.clone());
    let res = run_batch(&cfg)?;
    write_outputs(&res, &common.out)?;
    println!(
        "{} runs, {} unsolved; outputs in {}",
        res.rows.len(),
        res.unsolved,
        common.out.display()
    );
    for s in &res.slope_fits {
        println!("slope {}: {:.3} (r2 {:.3})", s.curve, s.slope, s.r2);
    }
    for note in &res.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Probe { which } => cmd_probe(which, cli.threads),
        Command::Experiment { which } => cmd_experiment(which, cli.threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_pairs() {
        assert_eq!(parse_size("25x50").ok(), Some((25, 50)));
        assert_eq!(parse_size(" 3X 8").ok(), Some((3, 8)));
        assert!(matches!(parse_size("25,50"), Err(Failure::Usage(_))));
        assert!(matches!(parse_size("ax5"), Err(Failure::Usage(_))));
    }

    #[test]
    fn command_tree_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
