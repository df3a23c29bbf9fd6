//! Acceptance suite. One PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails. Every criterion runs regardless of the others.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dupsolve::catalog::{exponential_formula, power_rule_addition, root_rule_addition, AdditionFormula};
use dupsolve::checker::{check_necessary, check_sufficient, linspace};
use dupsolve::double_angle::{taylor_closed_form, taylor_general};
use dupsolve::duplication::{
    approx_at, convergence_order, fit_slope, DuplicationConfig, Execution, RSource, ERROR_FLOOR,
};
use dupsolve::expr::ExprAst;
use dupsolve::harness::{example1, example2, run_solve, run_suite, SolveOptions, DEFAULT_EPSILON};
use dupsolve::reference::jacobi_sn_cn_dn;

type Criterion = (&'static str, fn() -> Outcome);
type LawCase = (AdditionFormula, Box<dyn Fn(f64) -> f64>, Vec<f64>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn failed(e: impl std::fmt::Display) -> Outcome {
    outcome(false, format!("error: {e}"))
}

/// Taylor coefficients from the recursion and from the closed forms agree
/// to 1e-10 relative on random polynomial right-hand sides.
fn c1_closed_forms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut worst, mut samples) = (0.0f64, 0);
    while samples < 60 {
        let degree = rng.random_range(1..=4);
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(0.5..=2.0)).collect();
        let x0: f64 = rng.random_range(0.5..=2.0);
        let src = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| format!("{c:?}*x^{k}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let f = ExprAst::parse(&src).expect("generated polynomial parses");
        if f.eval_scalar(x0).unwrap() < 0.5 {
            continue;
        }
        samples += 1;
        for order in 1..=10 {
            let (g, c) = match (taylor_general(&f, x0, order), taylor_closed_form(&f, x0, order)) {
                (Ok(g), Ok(c)) => (g, c),
                (Err(e), _) | (_, Err(e)) => return failed(format!("{src} at {x0}: {e}")),
            };
            for k in 1..=order {
                let (a, b) = (g.coeffs[k], c.coeffs[k]);
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("{samples} samples, orders 1..10, worst relative gap {worst:.2e}, {secs:.2}s"),
    )
}

fn example1_run(points: usize, m1: usize, m2: usize, r_source: &str) -> dupsolve::error::Result<f64> {
    let opts = SolveOptions::new((-0.5, 0.5)).points(points).orders(m1, m2).r_source(r_source);
    Ok(run_solve(&example1(), &opts)?.max_error())
}

fn c2_example1_exact() -> Outcome {
    let start = Instant::now();
    match example1_run(240, 20, 20, "exact") {
        Ok(e) => {
            let secs = start.elapsed().as_secs_f64();
            outcome(e <= 1e-7 && secs < 1.0, format!("max error {e:.3e}, {secs:.3}s"))
        }
        Err(e) => failed(e),
    }
}

fn c3_example1_taylor() -> Outcome {
    match (example1_run(240, 20, 20, "exact"), example1_run(240, 20, 20, "taylor")) {
        (Ok(exact), Ok(taylor)) => outcome(
            taylor <= 10.0 * exact,
            format!("taylor R {taylor:.3e} vs exact R {exact:.3e} (ratio {:.1e}, limit 10)", taylor / exact),
        ),
        (Err(e), _) | (_, Err(e)) => failed(e),
    }
}

fn c4_convergence_order() -> Outcome {
    let p = example1();
    let exact = p.exact_solution.clone().unwrap();
    let base = DuplicationConfig::coupled(9, (-0.5, 0.5), RSource::Exact(p.exact_r.clone().unwrap()));
    let fit = base.and_then(|b| convergence_order(&p.ivp, exact.as_ref(), &b, &[4, 5, 6, 7, 8, 9]));
    match fit {
        Ok(fit) => outcome(
            (1.7..=2.3).contains(&fit.slope),
            format!("fitted order {:.3} over {} levels", fit.slope, fit.samples.len()),
        ),
        Err(e) => failed(e),
    }
}

fn c5_error_floor() -> Outcome {
    let mut errors = Vec::new();
    for points in [240usize, 1000, 4000, 8000] {
        for m1 in [20usize, 30] {
            errors.push((format!("exact p={points} m1={m1}"), example1_run(points, m1, 20, "exact")));
        }
        for m2 in [30usize, 40, 50] {
            errors.push((format!("taylor p={points} m2={m2}"), example1_run(points, 30, m2, "taylor")));
        }
    }
    let mut lo = (String::new(), f64::INFINITY);
    for (name, e) in errors {
        match e {
            Ok(e) if e < lo.1 => lo = (name, e),
            Ok(_) => {}
            Err(e) => return failed(format!("{name}: {e}")),
        }
    }
    outcome(
        lo.1 >= 1e-15 && lo.1 <= ERROR_FLOOR,
        format!("smallest saturated max error {:.3e} ({})", lo.1, lo.0),
    )
}

/// Error at one point with `n` fixed scales as `s^p`, `s = t/2^n`,
/// `p = min(m1 + 1, m2 + 1)`.
fn c6_effective_order() -> Outcome {
    let p = example1();
    let exact = p.exact_solution.clone().unwrap();
    let n = 3u32;
    let ss: Vec<f64> = (0..8).map(|i| 0.002 * 10f64.powf(i as f64 / 7.0)).collect();
    let mut lines = Vec::new();
    let mut pass = true;
    for (m1, m2) in [(2usize, 20usize), (3, 20), (20, 2), (20, 3)] {
        let expected = (m1 + 1).min(m2 + 1) as f64;
        let mut pts = Vec::new();
        for &s in &ss {
            let t = s * 2f64.powi(n as i32);
            let cfg = DuplicationConfig::coupled(n, (0.0, t), RSource::Taylor).and_then(|c| c.with_orders(m1, m2));
            let v = cfg.and_then(|c| approx_at(&p.ivp, t, &c));
            match (v, exact(t)) {
                (Ok(v), Ok(x)) => pts.push((s, (v - x).abs())),
                (Err(e), _) | (_, Err(e)) => return failed(format!("({m1},{m2}) at s={s}: {e}")),
            }
        }
        let slope = fit_slope(&pts).unwrap_or(f64::NAN);
        pass &= (slope - expected).abs() <= 0.5;
        lines.push(format!("({m1},{m2}) {slope:.2}/{expected}"));
    }
    outcome(pass, format!("slope/expected: {}", lines.join(", ")))
}

/// `|R(x(t), x(τ)) - x(t+τ)|` against independent closed forms.
fn c7_addition_laws() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases: Vec<LawCase> = Vec::new();
    for n in 1..=3u32 {
        let nf = n as f64;
        // x' = x^(n+1), x(0) = 1
        let x = move |t: f64| (1.0 - nf * t).powf(-1.0 / nf);
        cases.push((power_rule_addition(n, 1.0).unwrap(), Box::new(x), linspace(-0.1, 0.1, 9)));
    }
    for n in 1..=2u32 {
        let p = n as f64 / (n + 1) as f64;
        // x' = x^(1/(n+1)), x(0) = 1
        let x = move |t: f64| (1.0 + p * t).powf(1.0 / p);
        cases.push((root_rule_addition(n, 1.0).unwrap(), Box::new(x), linspace(-0.4, 0.4, 9)));
    }
    for (r, x, grid) in &cases {
        for &t in grid {
            for &tau in grid {
                match r.eval2(x(t), x(tau)) {
                    Ok(v) => worst = worst.max((v - x(t + tau)).abs()),
                    Err(e) => return failed(format!("{} at ({t}, {tau}): {e}", r.name)),
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("{} formulas, worst residual {worst:.2e}", cases.len()))
}

fn c8_checker() -> Outcome {
    let mut cases: Vec<(AdditionFormula, f64, Vec<f64>, Vec<f64>)> = vec![(
        exponential_formula(),
        1.0,
        linspace(0.5, 2.0, 7),
        linspace(-0.4, 0.4, 5),
    )];
    for n in 1..=3u32 {
        cases.push((power_rule_addition(n, 1.0).unwrap(), 1.0, linspace(0.9, 1.1, 5), linspace(-0.1, 0.1, 5)));
    }
    for n in 1..=2u32 {
        cases.push((root_rule_addition(n, 1.0).unwrap(), 1.0, linspace(0.8, 1.6, 5), linspace(-0.3, 0.3, 5)));
    }
    let tol = 1e-6;
    let mut clean_fail = Vec::new();
    let mut missed = Vec::new();
    for (r, x0, grid, times) in &cases {
        let run = |r: &AdditionFormula| {
            check_necessary(r, *x0, grid, tol).and_then(|a| Ok(a.merge(check_sufficient(r, *x0, times, tol)?)))
        };
        match run(r) {
            Ok(rep) if rep.all_pass() && rep.coverage == 1.0 => {}
            Ok(rep) => clean_fail.push(format!("{}: {:?}", r.name, rep.failed())),
            Err(e) => clean_fail.push(format!("{}: {e}", r.name)),
        }
        for delta in [1e-3, -1e-3] {
            match run(&r.perturbed(delta)) {
                Ok(rep) if !rep.all_pass() => {}
                Ok(_) => missed.push(format!("{} δ={delta}", r.name)),
                Err(e) => missed.push(format!("{} δ={delta}: {e}", r.name)),
            }
        }
    }
    outcome(
        clean_fail.is_empty() && missed.is_empty(),
        format!(
            "{} formulas clean, {} planted defects flagged; failures {:?}, missed {:?}",
            cases.len() - clean_fail.len(),
            2 * cases.len() - missed.len(),
            clean_fail,
            missed
        ),
    )
}

fn non_increasing(errors: &[Option<f64>]) -> bool {
    errors.iter().all(Option::is_some) && errors.windows(2).all(|w| w[1].unwrap() <= w[0].unwrap())
}

fn c9_example2() -> Outcome {
    let start = Instant::now();
    let exact = example2(DEFAULT_EPSILON).and_then(|p| {
        let iv = p.default_interval.unwrap();
        run_solve(&p, &SolveOptions::new(iv).points(200).r_source("exact")).map(|r| r.max_error())
    });
    let exact = match exact {
        Ok(e) => e,
        Err(e) => return failed(e),
    };
    let trend = |suite: &str| -> Result<Vec<Option<f64>>, String> {
        let (summary, _) = run_suite(suite, DEFAULT_EPSILON, Execution::Parallel).map_err(|e| e.to_string())?;
        Ok(summary.cases.iter().map(|c| c.max_error).collect())
    };
    let (orders, points) = match (trend("taylor-order"), trend("points-sweep")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return failed(e),
    };
    let secs = start.elapsed().as_secs_f64();
    let show = |v: &[Option<f64>]| {
        v.iter()
            .map(|e| e.map_or("failed".to_string(), |e| format!("{e:.1e}")))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        exact <= 1e-5 && non_increasing(&orders) && non_increasing(&points) && secs < 30.0,
        format!(
            "ε={DEFAULT_EPSILON:e}: exact R {exact:.3e}; taylor m2 10/15/20/30 [{}]; points 80..2560 [{}]; {secs:.2}s",
            show(&orders),
            show(&points)
        ),
    )
}

fn c10_dn() -> Outcome {
    let mut details = Vec::new();
    let zero_ok = [0.0, 0.1, 0.25, 0.5, 0.9, 0.999, 1.0].iter().all(|&m| jacobi_sn_cn_dn(0.0, m).2 == 1.0);
    details.push(format!("dn(0|m)=1 {zero_ok}"));
    let sech = 1.0 / 1f64.cosh();
    let d1 = (jacobi_sn_cn_dn(1.0, 1.0).2 - sech).abs();
    details.push(format!("|dn(1|1) - sech 1| {d1:.1e}"));
    let mut worst = 0.0f64;
    for &m in &linspace(0.0, 1.0, 21) {
        for &u in &linspace(-5.0, 5.0, 41) {
            let (sn, _, dn) = jacobi_sn_cn_dn(u, m);
            worst = worst.max((dn * dn + m * sn * sn - 1.0).abs());
        }
    }
    details.push(format!("identity residual {worst:.1e}"));
    outcome(zero_ok && d1 <= 1e-12 && worst <= 1e-12, details.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("double-angle closed forms match the recursion", c1_closed_forms),
        ("example 1 on [-0.5, 0.5] with exact R", c2_example1_exact),
        ("example 1 with Taylor R of order 20", c3_example1_taylor),
        ("convergence order of the polygonal approximant", c4_convergence_order),
        ("rounding floor", c5_error_floor),
        ("effective order min(m1 + 1, m2 + 1)", c6_effective_order),
        ("addition laws against closed forms", c7_addition_laws),
        ("checker soundness and sensitivity", c8_checker),
        ("example 2 over half a period", c9_example2),
        ("Jacobi dn", c10_dn),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!("{} criterion {:>2}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
