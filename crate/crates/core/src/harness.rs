//! Problem loading, run records and the benchmark suites behind the CLI.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog::{example1_double, weierstrass_double};
use crate::double_angle::DoubleAngleMap;
use crate::duplication::{
    convergence_order, polygonal_with, DuplicationConfig, Execution, Partition, RSource, ERROR_FLOOR,
};
use crate::error::{Error, Result};
use crate::expr::ExprAst;
use crate::ivp::IvpProblem;
use crate::reference::{closed_form_example1, closed_form_example2, dp45_solve, rk4_solve};

/// Failures of a harness run, split the way the exit codes are.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

pub type Solution = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A problem ready to run: the IVP plus whatever exact data is known.
#[derive(Clone)]
pub struct Problem {
    pub ivp: IvpProblem,
    pub exact_r: Option<Arc<dyn DoubleAngleMap>>,
    pub exact_solution: Option<Solution>,
    /// Interval used when the caller gives none.
    pub default_interval: Option<(f64, f64)>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("ivp", &self.ivp)
            .field("exact_r", &self.exact_r.is_some())
            .field("exact_solution", &self.exact_solution.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum X0Value {
    Number(f64),
    Text(String),
}

/// JSON problem description.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub f: String,
    pub x0: X0Value,
    #[serde(default)]
    pub label: String,
    #[serde(default, rename = "exact_R", alias = "exact_r")]
    pub exact_r: Option<String>,
    #[serde(default)]
    pub exact_solution: Option<String>,
}

/// Value of a constant expression such as `-5/12 + 1e-12`.
pub fn constant_value(text: &str) -> Result<f64> {
    let v = ExprAst::parse_with_vars(text, &[])?.eval_scalar(0.0)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidConfig(format!("x0 = {text} is not finite")))
    }
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<Problem> {
        let x0 = match &self.x0 {
            X0Value::Number(v) => *v,
            X0Value::Text(s) => constant_value(s)?,
        };
        let ivp = IvpProblem::from_source(&self.f, x0, self.label)?;
        let exact_r = match self.exact_r {
            Some(src) => Some(Arc::new(ExprAst::parse(&src)?) as Arc<dyn DoubleAngleMap>),
            None => None,
        };
        let exact_solution = match self.exact_solution {
            Some(src) => {
                let ast = ExprAst::parse_with_vars(&src, &["t"])?;
                Some(Arc::new(move |t| ast.eval_scalar(t)) as Solution)
            }
            None => None,
        };
        Ok(Problem {
            ivp,
            exact_r,
            exact_solution,
            default_interval: None,
        })
    }
}

/// Default `ε` of the second built-in example.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// `x0 + 5/12` with the rounding of `5/12` compensated.
fn offset_from_root(x0: f64) -> f64 {
    let hi = 5.0 / 12.0;
    let lo = (-12.0f64).mul_add(hi, 5.0) / 12.0;
    (x0 + hi) + lo
}

/// `x' = x^2`, `x(0) = 1`.
pub fn example1() -> Problem {
    let ivp = IvpProblem::from_source("x^2", 1.0, "example1").expect("static problem");
    let sol = closed_form_example1(1.0).expect("x0 != 0");
    Problem {
        ivp,
        exact_r: Some(Arc::new(example1_double(1.0).expect("x0 != 0"))),
        exact_solution: Some(Arc::new(move |t| sol.eval(t))),
        default_interval: Some((-0.5, 0.5)),
    }
}

/// `x' = sqrt(4x³ - 13x/12 - 35/216)`, `x(0) = -5/12 + ε`, on its half period.
///
/// `ε` is re-derived from the rounded `x0` so that the IVP, the closed form
/// and the double-angle formula describe the same solution.
pub fn example2(epsilon: f64) -> Result<Problem> {
    let x0 = -5.0 / 12.0 + epsilon;
    let eps = offset_from_root(x0);
    let ivp = IvpProblem::from_source("sqrt(4*x^3 - (13/12)*x - 35/216)", x0, "example2")?;
    let sol = closed_form_example2(eps)?;
    let interval = sol.domain;
    Ok(Problem {
        ivp,
        exact_r: Some(Arc::new(weierstrass_double(eps)?)),
        exact_solution: Some(Arc::new(move |t| sol.eval(t))),
        default_interval: Some(interval),
    })
}

/// A built-in name (`example1`, `example2`) or a path to a problem file.
pub fn load_problem(spec: &str, epsilon: f64) -> std::result::Result<Problem, RunError> {
    match spec {
        "example1" => Ok(example1()),
        "example2" => Ok(example2(epsilon)?),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Io(format!("{path}: {e}")))?;
            let file: ProblemFile = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("{path}: {e}")))?;
            Ok(file.into_problem()?)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub x_ref: f64,
    pub x_method: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: String,
    pub config: Value,
    pub wall_time_s: f64,
    /// The max error sits at or under the rounding floor.
    pub at_error_floor: bool,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub rows: Vec<Row>,
    pub meta: RunMeta,
}

/// 17 significant digits: round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl RunResult {
    fn new(mut rows: Vec<Row>, mut meta: RunMeta) -> Self {
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut r = RunResult { rows, meta: meta.clone() };
        meta.at_error_floor = r.max_error() <= ERROR_FLOOR;
        r.meta = meta;
        r
    }

    pub fn max_error(&self) -> f64 {
        // NaN propagates; `f64::max` alone would drop it
        self.rows
            .iter()
            .map(|r| (r.x_method - r.x_ref).abs())
            .fold(0.0, |m, e| if e.is_nan() || m.is_nan() { f64::NAN } else { m.max(e) })
    }

    /// CSV with header `t,x_ref,x_method,abs_error`; the error column is
    /// recomputed here.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), RunError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x_ref", "x_method", "abs_error"])?;
        for r in &self.rows {
            let err = (r.x_method - r.x_ref).abs();
            w.write_record([fmt_f64(r.t), fmt_f64(r.x_ref), fmt_f64(r.x_method), fmt_f64(err)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> std::result::Result<(), RunError> {
        let f = std::fs::File::create(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Reads rows back from CSV written by [`RunResult::write_csv`].
pub fn read_csv_rows<R: std::io::Read>(input: R) -> std::result::Result<Vec<Row>, RunError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != ["t", "x_ref", "x_method", "abs_error"] {
        return Err(RunError::Io(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// `x(t)` for the error columns: the closed form when known, otherwise a
/// tight Dormand–Prince run over `[a, b]` in both directions from 0.
pub fn reference_for(problem: &Problem, interval: (f64, f64)) -> Result<(Solution, String)> {
    if let Some(s) = &problem.exact_solution {
        return Ok((s.clone(), "closed form".into()));
    }
    let (a, b) = interval;
    let tol = 1e-13;
    let fwd = if b > 0.0 { Some(dp45_solve(&problem.ivp, b, tol, tol)?) } else { None };
    let bwd = if a < 0.0 { Some(dp45_solve(&problem.ivp, a, tol, tol)?) } else { None };
    let x0 = problem.ivp.x0;
    Ok((
        Arc::new(move |t| match (t, &fwd, &bwd) {
            (0.0, _, _) => Ok(x0),
            (t, Some(s), _) if t > 0.0 => s.eval(t),
            (t, _, Some(s)) if t < 0.0 => s.eval(t),
            _ => Err(Error::Domain(format!("t = {t} not integrated"))),
        }),
        format!("dp45 rtol=atol={tol:e}"),
    ))
}

/// Options for one duplication run.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub interval: (f64, f64),
    pub points: Option<usize>,
    pub n: Option<u32>,
    pub m1: usize,
    pub m2: usize,
    pub r0: f64,
    pub r_source: String,
    pub exec: Execution,
}

impl SolveOptions {
    pub fn new(interval: (f64, f64)) -> Self {
        SolveOptions {
            interval,
            points: None,
            n: None,
            m1: crate::ivp::DEFAULT_M1,
            m2: crate::double_angle::DEFAULT_M2,
            r0: crate::duplication::DEFAULT_R0,
            r_source: "auto".into(),
            exec: Execution::default(),
        }
    }

    pub fn points(mut self, points: usize) -> Self {
        self.points = Some(points);
        self
    }

    pub fn orders(mut self, m1: usize, m2: usize) -> Self {
        self.m1 = m1;
        self.m2 = m2;
        self
    }

    pub fn r_source(mut self, src: &str) -> Self {
        self.r_source = src.into();
        self
    }
}

pub fn build_config(problem: &Problem, opts: &SolveOptions) -> Result<DuplicationConfig> {
    let r_source = match opts.r_source.as_str() {
        "exact" => RSource::Exact(problem.exact_r.clone().ok_or_else(|| {
            Error::InvalidConfig("r-source exact needs an exact double-angle formula".into())
        })?),
        "taylor" => RSource::Taylor,
        "auto" => RSource::Auto(problem.exact_r.clone()),
        other => return Err(Error::InvalidConfig(format!("unknown r-source `{other}`"))),
    };
    let partition = match (opts.points, opts.n) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig("give either points or n, not both".into()))
        }
        (Some(points), None) => Partition::Decoupled { points },
        (None, Some(_)) => Partition::Coupled,
        (None, None) => Partition::Decoupled { points: 240 },
    };
    DuplicationConfig {
        n: opts.n.unwrap_or(0),
        m1: opts.m1,
        m2: opts.m2,
        r0: opts.r0,
        interval: opts.interval,
        r_source,
        partition,
    }
    .validated()
}

fn config_json(cfg: &DuplicationConfig) -> Value {
    let partition = match cfg.partition {
        Partition::Coupled => json!({"kind": "coupled", "n": cfg.n, "nodes": (1u64 << cfg.n) + 1}),
        Partition::Decoupled { points } => json!({"kind": "decoupled", "points": points}),
    };
    json!({
        "interval": [cfg.interval.0, cfg.interval.1],
        "m1": cfg.m1,
        "m2": cfg.m2,
        "r0": cfg.r0,
        "r_source": cfg.r_source.label(),
        "effective_order": cfg.effective_order(),
        "partition": partition,
    })
}

/// Runs the duplication algorithm and tabulates it against the reference.
pub fn run_solve(problem: &Problem, opts: &SolveOptions) -> Result<RunResult> {
    let cfg = build_config(problem, opts)?;
    let (reference, ref_name) = reference_for(problem, cfg.interval)?;
    let start = Instant::now();
    let approx = polygonal_with(&problem.ivp, &cfg, opts.exec)?;
    let wall = start.elapsed().as_secs_f64();
    let rows = approx
        .nodes
        .iter()
        .map(|&(t, v)| {
            let x_ref = reference(t)?;
            Ok(Row {
                t,
                x_ref,
                x_method: v,
                abs_error: (v - x_ref).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut config = config_json(&cfg);
    config["max_r_excursion"] = json!(approx.max_excursion);
    if cfg.r_source.label() == "taylor" {
        if let Some(s) = crate::duplication::Duplicator::new(&problem.ivp, &cfg)?.series() {
            config["r_radius_estimate"] = json!(s.radius_estimate());
        }
    }
    Ok(RunResult::new(
        rows,
        RunMeta {
            method: "duplication".into(),
            config,
            wall_time_s: wall,
            at_error_floor: false,
            reference: ref_name,
        },
    ))
}

/// Classical integrators on the same nodes, for comparison.
pub fn run_integrator(problem: &Problem, nodes: &[f64], method: &str) -> Result<RunResult> {
    let (a, b) = (nodes[0], nodes[nodes.len() - 1]);
    let (reference, ref_name) = reference_for(problem, (a, b))?;
    let start = Instant::now();
    let solve = |t_end: f64| match method {
        "dp45" => dp45_solve(&problem.ivp, t_end, 1e-10, 1e-12),
        "rk4" => rk4_solve(&problem.ivp, t_end, 1e-3),
        other => Err(Error::InvalidConfig(format!("unknown integrator `{other}`"))),
    };
    let fwd = if b > 0.0 { Some(solve(b)?) } else { None };
    let bwd = if a < 0.0 { Some(solve(a)?) } else { None };
    let wall = start.elapsed().as_secs_f64();
    let rows = nodes
        .iter()
        .map(|&t| {
            let v = match (&fwd, &bwd) {
                _ if t == 0.0 => problem.ivp.x0,
                (Some(s), _) if t > 0.0 => s.eval(t)?,
                (_, Some(s)) => s.eval(t)?,
                _ => return Err(Error::Domain(format!("t = {t}"))),
            };
            let x_ref = reference(t)?;
            Ok(Row {
                t,
                x_ref,
                x_method: v,
                abs_error: (v - x_ref).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult::new(
        rows,
        RunMeta {
            method: method.into(),
            config: json!({"interval": [a, b], "points": nodes.len()}),
            wall_time_s: wall,
            at_error_floor: false,
            reference: ref_name,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub name: String,
    /// `None` when the case failed; see `error`.
    pub max_error: Option<f64>,
    pub wall_time_s: f64,
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub cases: Vec<CaseSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_order: Option<f64>,
}

/// A finished case: its summary and, when it ran, its rows.
pub struct CaseOutput {
    pub summary: CaseSummary,
    pub run: Option<RunResult>,
}

pub const SUITES: [&str; 5] = ["example1", "example2", "convergence", "taylor-order", "points-sweep"];

/// Taylor orders of the taylor-order suite.
pub const TAYLOR_ORDERS: [usize; 4] = [10, 15, 20, 30];

/// Point counts of the points-sweep suite.
pub const SWEEP_POINTS: [usize; 6] = [80, 160, 320, 640, 1280, 2560];

fn case(name: String, config: Value, run: Result<RunResult>) -> CaseOutput {
    match run {
        Ok(r) => {
            let max = r.max_error();
            CaseOutput {
                summary: CaseSummary {
                    name,
                    // non-finite errors are failures, not data points
                    max_error: max.is_finite().then_some(max),
                    wall_time_s: r.meta.wall_time_s,
                    config: r.meta.config.clone(),
                    error: (!max.is_finite()).then(|| format!("max error {max}")),
                },
                run: Some(r),
            }
        }
        Err(e) => CaseOutput {
            summary: CaseSummary {
                name,
                max_error: None,
                wall_time_s: 0.0,
                config,
                error: Some(e.to_string()),
            },
            run: None,
        },
    }
}

fn solve_case(problem: &Problem, name: &str, opts: SolveOptions) -> CaseOutput {
    let cfg = json!({"interval": [opts.interval.0, opts.interval.1], "points": opts.points,
                     "m1": opts.m1, "m2": opts.m2, "r_source": opts.r_source});
    case(name.to_string(), cfg, run_solve(problem, &opts))
}

/// Runs one suite; each case fails independently.
pub fn run_suite(suite: &str, epsilon: f64, exec: Execution) -> Result<(SuiteSummary, Vec<CaseOutput>)> {
    let mut fitted_order = None;
    let cases = match suite {
        "example1" => {
            let p = example1();
            let mut out = vec![
                solve_case(&p, "I1_exact_240", SolveOptions { exec, ..SolveOptions::new((-0.5, 0.5)).points(240).r_source("exact") }),
                solve_case(&p, "I1_taylor_m2_20_240", SolveOptions { exec, ..SolveOptions::new((-0.5, 0.5)).points(240).r_source("taylor") }),
                solve_case(&p, "I2_exact_10000", SolveOptions { exec, ..SolveOptions::new((-0.5, 0.99)).points(10_000).r_source("exact") }),
            ];
            let nodes = crate::checker::linspace(-0.5, 0.5, 240);
            for m in ["dp45", "rk4"] {
                out.push(case(format!("I1_{m}_240"), json!({"method": m}), run_integrator(&p, &nodes, m)));
            }
            out
        }
        "example2" => {
            let p = example2(epsilon)?;
            let iv = p.default_interval.expect("built-in interval");
            let mut out: Vec<CaseOutput> = [100usize, 200, 500, 1000, 2000, 4000]
                .iter()
                .map(|&n| solve_case(&p, &format!("exact_{n}"), SolveOptions { exec, ..SolveOptions::new(iv).points(n).r_source("exact") }))
                .collect();
            let nodes = crate::checker::linspace(iv.0, iv.1, 100);
            out.push(case("dp45_100".into(), json!({"method": "dp45"}), run_integrator(&p, &nodes, "dp45")));
            out
        }
        "convergence" => {
            let p = example1();
            let exact = p.exact_solution.clone().expect("closed form");
            let ns = [4u32, 5, 6, 7, 8, 9];
            let base = build_config(&p, &SolveOptions { n: Some(9), exec, ..SolveOptions::new((-0.5, 0.5)).r_source("exact") })?;
            let start = Instant::now();
            let fit = convergence_order(&p.ivp, exact.as_ref(), &base, &ns)?;
            let wall = start.elapsed().as_secs_f64() / ns.len() as f64;
            fitted_order = Some(fit.slope);
            ns.iter()
                .zip(&fit.samples)
                .map(|(&n, &(h, e))| CaseOutput {
                    summary: CaseSummary {
                        name: format!("n_{n}"),
                        max_error: Some(e),
                        wall_time_s: wall,
                        config: json!({"n": n, "h": h, "nodes": (1u64 << n) + 1, "probe": "nodes and midpoints"}),
                        error: None,
                    },
                    run: None,
                })
                .collect()
        }
        "taylor-order" => {
            let p = example2(epsilon)?;
            let iv = p.default_interval.expect("built-in interval");
            TAYLOR_ORDERS
                .iter()
                .map(|&m| solve_case(&p, &format!("taylor_m_{m}"), SolveOptions { exec, ..SolveOptions::new(iv).points(200).orders(m, m).r_source("taylor") }))
                .collect()
        }
        "points-sweep" => {
            let p = example2(epsilon)?;
            let iv = p.default_interval.expect("built-in interval");
            SWEEP_POINTS
                .iter()
                .map(|&n| solve_case(&p, &format!("taylor30_points_{n}"), SolveOptions { exec, ..SolveOptions::new(iv).points(n).orders(30, 30).r_source("taylor") }))
                .collect()
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown suite `{other}`; expected one of {SUITES:?}"
            )))
        }
    };
    let summary = SuiteSummary {
        suite: suite.to_string(),
        cases: cases.iter().map(|c| c.summary.clone()).collect(),
        fitted_order,
    };
    Ok((summary, cases))
}

/// Writes one CSV per case plus `summary.json` into `dir`.
pub fn write_suite(dir: &Path, summary: &SuiteSummary, cases: &[CaseOutput]) -> std::result::Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    for c in cases {
        if let Some(run) = &c.run {
            run.write_csv_file(&dir.join(format!("{}.csv", c.summary.name)))?;
        }
    }
    if summary.suite == "convergence" {
        let path = dir.join("convergence.csv");
        let f = std::fs::File::create(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["n", "h", "max_error"])?;
        for c in &summary.cases {
            let h = c.config["h"].as_f64().unwrap_or(f64::NAN);
            w.write_record([
                c.config["n"].to_string(),
                fmt_f64(h),
                fmt_f64(c.max_error.unwrap_or(f64::NAN)),
            ])?;
        }
        w.flush()?;
    }
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(summary).map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}
