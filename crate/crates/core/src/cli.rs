//! Command-line front end. Exit codes: 0 ok, 2 configuration, 3 numerical,
//! 4 I/O. Failures print one JSON object on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::catalog::AdditionFormula;
use crate::checker::{check_necessary, check_sufficient, linspace, DEFAULT_TOL};
use crate::double_angle::{taylor_closed_form, taylor_general, CLOSED_FORM_MAX_ORDER};
use crate::duplication::Execution;
use crate::error::Error;
use crate::expr::ExprAst;
use crate::harness::{self, load_problem, RunError, SolveOptions, DEFAULT_EPSILON};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Routes disagreeing by more than this are flagged by `expand`.
pub const ROUTE_AGREEMENT: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "dupsolve", version, about = "Duplication-based solver for autonomous scalar ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Taylor coefficients of the double-angle formula about x0.
    Expand(ExpandArgs),
    /// Polygonal approximation on an interval, tabulated against a reference.
    Solve(SolveArgs),
    /// Necessary and sufficient conditions for a candidate addition formula.
    Check(CheckArgs),
    /// Benchmark suite, written as CSV files plus summary.json.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Route {
    General,
    ClosedForm,
    Both,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// `example1`, `example2` or a problem JSON file.
    pub problem: String,
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = Route::Both)]
    pub route: Route,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RSourceArg {
    Exact,
    Taylor,
    Auto,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub problem: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Decoupled partition with this many equispaced points.
    #[arg(long, conflicts_with = "n")]
    pub points: Option<usize>,
    /// Coupled partition with 2^n + 1 nodes and n doublings everywhere.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = crate::ivp::DEFAULT_M1)]
    pub m1: usize,
    #[arg(long, default_value_t = crate::double_angle::DEFAULT_M2)]
    pub m2: usize,
    #[arg(long, value_enum, default_value_t = RSourceArg::Auto)]
    pub r_source: RSourceArg,
    #[arg(long, default_value_t = crate::duplication::DEFAULT_R0)]
    pub r0: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metadata JSON destination; defaults to `<out>.meta.json`.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Worker threads; falls back to DUPSOLVE_THREADS. 1 runs sequentially.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Expression in x, y, or a file holding one.
    pub r: String,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: f64,
    /// Spatial grid `a:b:n`; defaults to x0 ± max(1, |x0|)/2 with 7 points.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Time grid `a:b:n` for the sufficient conditions.
    #[arg(long, allow_hyphen_values = true, default_value = "-0.25:0.25:5")]
    pub times: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Skip the sufficient conditions.
    #[arg(long)]
    pub necessary_only: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_parser = harness::SUITES)]
    pub suite: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, kind: "InvalidConfig".into(), message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError { code: EXIT_IO, kind: "IoError".into(), message: message.into() }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message, "exit_code": self.code}).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_config_error() { EXIT_CONFIG } else { EXIT_NUMERIC };
        CliError { code, kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Core(e) => e.into(),
            RunError::Io(m) => CliError::io(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

/// Parses `a:b:n`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::config(format!("grid `{spec}` is not of the form a:b:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    Ok(linspace(a, b, n))
}

fn threads_setting(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("DUPSOLVE_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::config(format!("DUPSOLVE_THREADS = `{v}` is not a count"))),
        _ => Ok(None),
    }
}

fn execution(threads: Option<usize>) -> Execution {
    match threads {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    }
}

/// Runs `body` on a pool of the requested size, if any.
fn with_threads<T>(threads: Option<usize>, body: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match threads {
        Some(0) => Err(CliError::config("threads must be positive")),
        #[cfg(feature = "parallel")]
        Some(k) if k > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::config(e.to_string()))?;
            Ok(pool.install(body))
        }
        _ => Ok(body()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn cmd_expand<W: Write>(args: &ExpandArgs, out: &mut W) -> Result<(), CliError> {
    let problem = load_problem(&args.problem, args.epsilon)?;
    let (f, x0) = (&problem.ivp.f, problem.ivp.x0);
    let general = match args.route {
        Route::ClosedForm => None,
        _ => Some(taylor_general(f, x0, args.order)?),
    };
    let closed = match args.route {
        Route::General => None,
        Route::ClosedForm => Some(taylor_closed_form(f, x0, args.order)?),
        Route::Both if args.order <= CLOSED_FORM_MAX_ORDER => Some(taylor_closed_form(f, x0, args.order)?),
        Route::Both => None,
    };
    writeln!(out, "k,general,closed_form,flag")?;
    let mut disagreements = 0;
    for k in 0..=args.order {
        let g = general.as_ref().map(|s| s.coeffs[k]);
        let c = closed.as_ref().map(|s| s.coeffs[k]);
        let flag = match (g, c) {
            (Some(g), Some(c)) if (g - c).abs() > ROUTE_AGREEMENT * (1.0 + g.abs()) => {
                disagreements += 1;
                "MISMATCH"
            }
            _ => "",
        };
        let cell = |v: Option<f64>| v.map(harness::fmt_f64).unwrap_or_default();
        writeln!(out, "{k},{},{},{flag}", cell(g), cell(c))?;
    }
    if let Some(s) = general.as_ref().or(closed.as_ref()) {
        writeln!(out, "# radius estimate {:e}", s.radius_estimate())?;
    }
    if disagreements > 0 {
        return Err(CliError {
            code: EXIT_NUMERIC,
            kind: "RouteMismatch".into(),
            message: format!("{disagreements} coefficients differ between routes by more than {ROUTE_AGREEMENT:e}"),
        });
    }
    Ok(())
}

pub fn cmd_solve<W: Write>(args: &SolveArgs, out: &mut W) -> Result<(), CliError> {
    let problem = load_problem(&args.problem, args.epsilon)?;
    let interval = match (&args.interval, problem.default_interval) {
        (Some(v), _) => (v[0], v[1]),
        (None, Some(iv)) => iv,
        (None, None) => return Err(CliError::config("--interval is required for this problem")),
    };
    let threads = threads_setting(args.threads)?;
    let opts = SolveOptions {
        interval,
        points: args.points,
        n: args.n,
        m1: args.m1,
        m2: args.m2,
        r0: args.r0,
        r_source: match args.r_source {
            RSourceArg::Exact => "exact",
            RSourceArg::Taylor => "taylor",
            RSourceArg::Auto => "auto",
        }
        .into(),
        exec: execution(threads),
    };
    let run = with_threads(threads, || harness::run_solve(&problem, &opts))??;
    let meta = serde_json::to_string_pretty(&run.meta).map_err(|e| CliError::io(e.to_string()))?;
    match &args.out {
        Some(path) => {
            run.write_csv_file(path)?;
            let meta_path = args.meta.clone().unwrap_or_else(|| {
                let mut p = path.clone().into_os_string();
                p.push(".meta.json");
                p.into()
            });
            write_file(&meta_path, &meta)?;
        }
        None => {
            run.write_csv(&mut *out)?;
            if let Some(p) = &args.meta {
                write_file(p, &meta)?;
            }
        }
    }
    Ok(())
}

pub fn cmd_check<W: Write>(args: &CheckArgs, out: &mut W) -> Result<(), CliError> {
    let source = if Path::new(&args.r).is_file() {
        std::fs::read_to_string(&args.r).map_err(|e| CliError::io(format!("{}: {e}", args.r)))?
    } else {
        args.r.clone()
    };
    let ast = ExprAst::parse_bivariate(source.trim())?;
    let r = AdditionFormula::from_expr(ast, args.x0, source.trim())?;
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => {
            let w = 0.5 * args.x0.abs().max(1.0);
            linspace(args.x0 - w, args.x0 + w, 7)
        }
    };
    let mut report = check_necessary(&r, args.x0, &grid, args.tol)?;
    if !args.necessary_only {
        let times = parse_grid(&args.times)?;
        report = report.merge(check_sufficient(&r, args.x0, &times, args.tol)?);
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

pub fn cmd_bench<W: Write>(args: &BenchArgs, out: &mut W) -> Result<(), CliError> {
    let threads = threads_setting(args.threads)?;
    let exec = execution(threads);
    let (summary, cases) = with_threads(threads, || harness::run_suite(&args.suite, args.epsilon, exec))??;
    harness::write_suite(&args.out, &summary, &cases)?;
    for c in &summary.cases {
        match (c.max_error, &c.error) {
            (Some(e), _) => writeln!(out, "{:<24} max_error {e:.3e}  {:.3}s", c.name, c.wall_time_s)?,
            (None, err) => writeln!(out, "{:<24} failed: {}", c.name, err.as_deref().unwrap_or("?"))?,
        }
    }
    if let Some(p) = summary.fitted_order {
        writeln!(out, "fitted order {p:.3}")?;
    }
    Ok(())
}

/// Dispatches a parsed command, writing regular output to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::Expand(a) => cmd_expand(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(parse_grid("0:1").unwrap_err().code, EXIT_CONFIG);
        assert_eq!(parse_grid("0:1:0").unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::EmptyGrid).code, EXIT_CONFIG);
        assert_eq!(CliError::from(Error::Pole("x".into())).code, EXIT_NUMERIC);
        assert_eq!(CliError::from(RunError::Io("gone".into())).code, EXIT_IO);
    }

    #[test]
    fn expand_routes_agree_on_example1() {
        let cli = Cli::try_parse_from(["dupsolve", "expand", "example1", "--order", "8"]).unwrap();
        let mut buf = Vec::new();
        run(&cli, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("MISMATCH"));
        // R(x) = x/(2 - x) at x0 = 1: every coefficient is 2
        let row2: Vec<&str> = text.lines().nth(3).unwrap().split(',').collect();
        assert_eq!(row2[0], "2");
        assert!((row2[1].parse::<f64>().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_route_caps_order() {
        let cli = Cli::try_parse_from(["dupsolve", "expand", "example1", "--order", "11", "--route", "closed-form"]).unwrap();
        let err = run(&cli, &mut Vec::new()).unwrap_err();
        assert_eq!((err.code, err.kind.as_str()), (EXIT_CONFIG, "OrderTooHigh"));
    }

    #[test]
    fn check_addition_of_sum() {
        let cli = Cli::try_parse_from(["dupsolve", "check", "x + y", "--x0", "0"]).unwrap();
        let mut buf = Vec::new();
        run(&cli, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let conds = v["conditions"].as_array().unwrap();
        assert!(conds.iter().all(|c| c["pass"] == true), "{v}");
    }
}
