use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::json;

use topiary_core::diagnostics::{capm_report, jc_report, sml_points, ReportHeader};
use topiary_core::io::{fmt_f64, read_json, to_json_string, trace_csv, write_atomic, ProblemFile, ResultFile, FORMAT_VERSION};
use topiary_core::maze::{conjugate_field, potential_field, solve_maze, trace_path, Mask, MazeSpec};
use topiary_core::measure::WEIGHT_TOL;
use topiary_core::objective::MARGIN_TOL;
use topiary_core::portfolio::{optimize_portfolio, PortfolioSpec, ReturnsTable};
use topiary_core::solver::{construction_ordering, evaluate_measure, oracle_solve, solve, DECONSTRUCT_CAP};
use topiary_core::{Algorithm, AtomicMeasure, Error, ErrorClass, Kernel, KernelOptions, Problem, Psi, Result, SolveConfig, TopiaryResult};

#[derive(Parser)]
#[command(name = "topiary", version, about = "Sparse optimal measures over kernel-embedded point sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Exhaustive search over supports (small problems only).
    Oracle(SolveArgs),
    /// Margin, CAPM, Julia-Carathéodory and security-market-line reports for a solution.
    Diagnose(DiagnoseArgs),
    /// Long-only portfolio selection.
    Portfolio(PortfolioArgs),
    /// Harmonic maze solving on a rasterized obstacle mask.
    Maze(MazeArgs),
    /// Solve, then order the topiaric index so every prefix is itself an index.
    Deconstruct(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "second-greedy")]
    algorithm: Algorithm,
    /// Score tolerance, relative to the kernel scale.
    #[arg(long, default_value_t = MARGIN_TOL)]
    tol: f64,
    #[arg(long, default_value_t = WEIGHT_TOL)]
    weight_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    seed_point: Option<usize>,
    /// Print the JSON output to stdout instead of the summary line.
    #[arg(long)]
    json: bool,
}

impl SolveArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            algorithm: self.algorithm,
            margin_tol: self.tol,
            weight_tol: self.weight_tol,
            max_iter: self.max_iter,
            trace: self.trace.is_some(),
            seed_point: self.seed_point,
            ..SolveConfig::default()
        }
    }

    fn outputs(&self) -> Vec<&Path> {
        self.output.iter().chain(&self.trace).map(PathBuf::as_path).collect()
    }
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Result JSON from `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    capm: Option<PathBuf>,
    #[arg(long)]
    jc: Option<PathBuf>,
    #[arg(long)]
    sml: Option<PathBuf>,
    /// Base points for the slope report (defaults to the whole index).
    #[arg(long, value_delimiter = ',')]
    base: Vec<usize>,
    #[arg(long, default_value_t = MARGIN_TOL)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PortfolioArgs {
    /// CSV of per-period simple returns with a header row of labels.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    returns: Option<PathBuf>,
    /// Portfolio spec JSON with means and covariance.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    risk_free: Option<f64>,
    #[arg(long)]
    mean_shrink: Option<f64>,
    #[arg(long)]
    var_inflate: Option<f64>,
    #[arg(long)]
    annualize: Option<u32>,
    /// Reference measure JSON.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output JSON; capm.csv and sml.csv are written next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "exchange")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = MARGIN_TOL)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MazeArgs {
    /// Text grid ('#' obstacle, '.' free) or P1 PBM.
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    cell_size: f64,
    /// Target point "a,b"; the default pulls toward infinity.
    #[arg(long, value_parser = parse_pair)]
    target: Option<[f64; 2]>,
    /// Positive radius or "auto".
    #[arg(long, default_value = "auto", value_parser = parse_radius)]
    escape_radius: Radius,
    /// Potential field as PGM.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    field_res: usize,
    /// Harmonic conjugate field as PGM.
    #[arg(long)]
    conjugate: Option<PathBuf>,
    /// Escape path as CSV.
    #[arg(long)]
    path: Option<PathBuf>,
    /// Path step length (defaults to a quarter cell).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    max_steps: usize,
    /// Run metadata JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy)]
enum Radius {
    Auto,
    Fixed(f64),
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([a.parse().map_err(|e| format!("{a:?}: {e}"))?, b.parse().map_err(|e| format!("{b:?}: {e}"))?]),
        _ => Err(format!("expected \"a,b\", got {s:?}")),
    }
}

fn parse_radius(s: &str) -> std::result::Result<Radius, String> {
    if s == "auto" {
        return Ok(Radius::Auto);
    }
    s.parse().map(Radius::Fixed).map_err(|e| format!("{s:?}: {e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TOPIARY_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a, Mode::Solve),
        Command::Oracle(a) => run_solve(a, Mode::Oracle),
        Command::Deconstruct(a) => run_solve(a, Mode::Deconstruct),
        Command::Diagnose(a) => run_diagnose(a),
        Command::Portfolio(a) => run_portfolio(a),
        Command::Maze(a) => run_maze(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::NonConvergence => 4,
                ErrorClass::Internal => 5,
            })
        }
    }
}

/// Rejects missing inputs, outputs in missing directories, and outputs that
/// would overwrite an input.
fn check_paths(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let mut canon = Vec::new();
    for p in inputs {
        if !p.is_file() {
            return Err(Error::InvalidInput(format!("input file not found: {}", p.display())));
        }
        canon.push(fs::canonicalize(p)?);
    }
    for (i, p) in outputs.iter().enumerate() {
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !dir.is_dir() {
            return Err(Error::InvalidInput(format!("output directory does not exist: {}", dir.display())));
        }
        if p.exists() && canon.contains(&fs::canonicalize(p)?) {
            return Err(Error::InvalidInput(format!("refusing to overwrite input file {}", p.display())));
        }
        if outputs[..i].contains(p) {
            return Err(Error::InvalidInput(format!("output path given twice: {}", p.display())));
        }
    }
    Ok(())
}

fn summary(r: &TopiaryResult) -> String {
    format!("objective={} rate={} score={} support={}", fmt_f64(r.objective), fmt_f64(r.rate), fmt_f64(r.score), r.measure.len())
}

fn load(path: &Path) -> Result<(ProblemFile, Kernel, Psi)> {
    let file: ProblemFile = read_json(path)?;
    let (kernel, psi) = file.build(KernelOptions::default())?;
    Ok((file, kernel, psi))
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Solve,
    Oracle,
    Deconstruct,
}

fn run_solve(args: &SolveArgs, mode: Mode) -> Result<()> {
    check_paths(&[&args.input], &args.outputs())?;
    let config = args.config();
    config.validate()?;
    let (_, kernel, psi) = load(&args.input)?;
    let problem = Problem::new(&kernel, &psi)?;
    let all = problem.all();
    let solved = match mode {
        Mode::Oracle => oracle_solve(problem, &all),
        _ => solve(problem, &all, &config),
    };
    let result = match solved {
        Ok(r) => r,
        Err(e) => {
            if let (Error::MaxIterExceeded { partial, .. } | Error::CycleDetected { partial, .. }, Some(path)) = (&e, &args.trace) {
                if let Some(t) = &partial.trace {
                    write_atomic(path, trace_csv(t).as_bytes())?;
                }
            }
            return Err(e);
        }
    };
    info!("{} finished after {} iterations", result.algorithm, result.iterations);
    if let (Some(path), Some(t)) = (&args.trace, &result.trace) {
        write_atomic(path, trace_csv(t).as_bytes())?;
    }
    let (text, line) = if mode == Mode::Deconstruct {
        let order = construction_ordering(problem, &result.index, &config, DECONSTRUCT_CAP)?;
        let doc = json!({
            "format_version": FORMAT_VERSION,
            "index": result.index,
            "order": order,
            "result": ResultFile::new(&result, &kernel),
        });
        let line = format!("{} order={:?}", summary(&result), order);
        (to_json_string(&doc)?, line)
    } else {
        (to_json_string(&ResultFile::new(&result, &kernel))?, summary(&result))
    };
    if let Some(path) = &args.output {
        write_atomic(path, text.as_bytes())?;
    }
    if args.json {
        print!("{text}");
    } else {
        println!("{line}");
    }
    Ok(())
}

fn run_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let outputs: Vec<&Path> = [&args.capm, &args.jc, &args.sml].into_iter().flatten().map(PathBuf::as_path).collect();
    check_paths(&[&args.input, &args.solution], &outputs)?;
    let (file, kernel, psi) = load(&args.input)?;
    let stored: ResultFile = read_json(&args.solution)?;
    let measure: AtomicMeasure = stored.measure()?;
    let problem = Problem::new(&kernel, &psi)?;
    let all = problem.all();
    let result = evaluate_measure(problem, &all, measure, stored.algorithm, args.tol)?;
    if (result.objective - stored.objective).abs() > 1e-9 * (1.0 + stored.objective.abs()) {
        warn!("stored objective {} differs from recomputed {}", stored.objective, result.objective);
    }
    if result.score > result.tolerance {
        warn!("solution is not converged: score {} exceeds tolerance {}", result.score, result.tolerance);
    }
    if let Some(path) = &args.capm {
        let report = capm_report(&result, &kernel, &psi, &all)?;
        for v in report.violations() {
            eprintln!("capm: point {v} has positive alpha beyond tolerance");
        }
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    if let Some(path) = &args.jc {
        let base = if args.base.is_empty() { result.index.clone() } else { args.base.clone() };
        let report = jc_report(&result, &kernel, &psi, &all, &base, file.psi.spec().embedded_norm(&kernel))?;
        for v in &report.violations {
            eprintln!("jc: {v}");
        }
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    if let Some(path) = &args.sml {
        let report = sml_points(&result, &kernel, &psi, &all, &[])?;
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    if args.json {
        print!("{}", to_json_string(&ReportHeader::new(&result, &kernel))?);
    } else {
        println!("{} index={:?}", summary(&result), result.index);
    }
    Ok(())
}

fn run_portfolio(args: &PortfolioArgs) -> Result<()> {
    let source = args.returns.as_ref().or(args.spec.as_ref()).expect("clap enforces one source");
    let mut inputs = vec![source.as_path()];
    inputs.extend(args.reference.as_deref());
    let side = |name: &str| args.output.as_ref().map(|o| o.with_file_name(name));
    let (capm_path, sml_path) = (side("capm.csv"), side("sml.csv"));
    let outputs: Vec<&Path> = [&args.output, &capm_path, &sml_path].into_iter().flatten().map(PathBuf::as_path).collect();
    check_paths(&inputs, &outputs)?;

    let mut spec = match &args.returns {
        Some(p) => PortfolioSpec::from_returns(&ReturnsTable::from_path(p)?)?,
        None => read_json(source)?,
    };
    if let Some(r) = args.risk_free {
        spec.risk_free_rate = Some(r);
    }
    if let Some(s) = args.mean_shrink {
        spec.mean_shrink = s;
    }
    if let Some(l) = args.var_inflate {
        spec.var_inflate = l;
    }
    if let Some(n) = args.annualize {
        spec.annualize_factor = Some(n);
    }
    if let Some(p) = &args.reference {
        spec.reference = Some(read_json(p)?);
    }
    let config = SolveConfig { algorithm: args.algorithm, margin_tol: args.tol, ..SolveConfig::default() };
    config.validate()?;
    let outcome = optimize_portfolio(&spec, &config)?;
    let text = to_json_string(&outcome.report())?;
    if let Some(path) = &args.output {
        write_atomic(path, text.as_bytes())?;
        let all: Vec<usize> = (0..outcome.kernel.len()).collect();
        let capm = capm_report(&outcome.result, &outcome.kernel, &outcome.psi, &all)?;
        write_atomic(capm_path.as_deref().expect("set with output"), capm.to_csv().as_bytes())?;
        let sml = sml_points(&outcome.result, &outcome.kernel, &outcome.psi, &all, &[])?;
        write_atomic(sml_path.as_deref().expect("set with output"), sml.to_csv().as_bytes())?;
    }
    if args.json {
        print!("{text}");
    } else {
        let alloc: Vec<String> =
            outcome.allocation().iter().map(|&(p, w)| format!("{}:{}", outcome.spec.assets[p], fmt_f64(w))).collect();
        println!("{} variance={} allocation={}", summary(&outcome.result), fmt_f64(outcome.variance()), alloc.join(","));
    }
    Ok(())
}

fn run_maze(args: &MazeArgs) -> Result<()> {
    let outputs: Vec<&Path> =
        [&args.field, &args.conjugate, &args.path, &args.output].into_iter().flatten().map(PathBuf::as_path).collect();
    check_paths(&[&args.mask], &outputs)?;
    if args.field_res == 0 {
        return Err(Error::InvalidInput("field resolution must be positive".into()));
    }
    let mut spec = MazeSpec::new(Mask::from_path(&args.mask)?, args.cell_size);
    spec.target = args.target;
    spec.escape_radius = match args.escape_radius {
        Radius::Auto => None,
        Radius::Fixed(r) => Some(r),
    };
    spec.validate()?;
    let sol = solve_maze(&spec, &MazeSpec::default_config())?;
    if sol.trichotomy {
        warn!("the start point lies inside an obstacle; the topiary is a point mass");
    }
    let grid = sol.default_grid(args.field_res);
    if let Some(p) = &args.field {
        write_atomic(p, potential_field(&sol, &grid)?.to_pgm().as_bytes())?;
    }
    if let Some(p) = &args.conjugate {
        write_atomic(p, conjugate_field(&sol, &grid)?.to_pgm().as_bytes())?;
    }
    let path = if sol.trichotomy {
        if args.path.is_some() {
            warn!("no escape path from inside an obstacle");
        }
        None
    } else {
        Some(trace_path(&sol, args.step.unwrap_or(args.cell_size / 4.0), args.max_steps)?)
    };
    if let (Some(p), Some(trace)) = (&args.path, &path) {
        write_atomic(p, trace.to_csv().as_bytes())?;
    }
    let meta = sol.meta(path.as_ref());
    let text = to_json_string(&meta)?;
    if let Some(p) = &args.output {
        write_atomic(p, text.as_bytes())?;
    }
    if args.json {
        print!("{text}");
    } else {
        let status = path.as_ref().map_or("none", |t| t.status.as_str());
        println!("{} status={status}", summary(&sol.result));
    }
    Ok(())
}
