//! Numerical verification that a bivariate `R` is an addition formula, and
//! recovery of the ODE it belongs to.
//!
//! Necessary conditions, for identity element `x0`:
//! symmetry `R(x, y) = R(y, x)`; identity `R(x0, y) = y`; cross partials
//! `R_x(x0, z) = R_y(z, x0)`; associativity `R(R(x, y), z) = R(x, R(y, z))`.
//!
//! The generating ODE is `x' = R_x(x0, x) x'(0)`. Sufficiency is checked by
//! the chain rule identity `R_x(a, b) R_x(x0, a) = R_x(x0, R(a, b))` on
//! points of the solution, and end to end by integrating that ODE and
//! comparing `x(t + τ)` with `R(x(t), x(τ))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{AdditionFormula, Arity};
use crate::error::{Error, Result};
use crate::reference::dp45_solve_fn;

/// Default pass tolerance, matched to the `h²` error of the differences.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Relative step of the central differences.
pub const FD_STEP: f64 = 1e-6;

const INTEGRATOR_TOL: f64 = 1e-12;

/// Per-point failures kept in a report.
const MAX_LOGGED: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    /// Largest residual seen; infinite (null in JSON) when nothing evaluated.
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub pass: bool,
    pub evaluated: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub conditions: Vec<ConditionResult>,
    pub grid: String,
    pub tolerance: f64,
    /// Fraction of sample points at which every sub-expression evaluated.
    pub coverage: f64,
    pub errors: Vec<String>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    /// Concatenates two reports made with the same tolerance.
    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        let (a, b) = (self.conditions.len() as f64, other.conditions.len() as f64);
        self.coverage = (self.coverage * a + other.coverage * b) / (a + b).max(1.0);
        self.conditions.extend(other.conditions);
        self.grid = format!("{}; {}", self.grid, other.grid);
        self.errors.extend(other.errors);
        self.errors.truncate(MAX_LOGGED);
        self
    }
}

struct Tally {
    name: &'static str,
    max: f64,
    worst: Vec<f64>,
    evaluated: usize,
    skipped: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            max: 0.0,
            worst: Vec::new(),
            evaluated: 0,
            skipped: 0,
        }
    }

    fn record(&mut self, residual: Result<f64>, point: &[f64], errors: &mut Vec<String>) {
        match residual {
            Ok(r) if r.is_finite() => {
                self.evaluated += 1;
                if r > self.max || self.worst.is_empty() {
                    self.max = self.max.max(r);
                    self.worst = point.to_vec();
                }
            }
            Ok(r) => {
                self.skipped += 1;
                log(errors, format!("{} at {point:?}: residual {r}", self.name));
            }
            Err(e) => {
                self.skipped += 1;
                log(errors, format!("{} at {point:?}: {e}", self.name));
            }
        }
    }

    fn finish(self, tol: f64) -> ConditionResult {
        let max = if self.evaluated == 0 { f64::INFINITY } else { self.max };
        ConditionResult {
            name: self.name.to_string(),
            max_residual: max,
            worst_point: self.worst,
            pass: max <= tol,
            evaluated: self.evaluated,
            skipped: self.skipped,
        }
    }
}

fn log(errors: &mut Vec<String>, msg: String) {
    if errors.len() < MAX_LOGGED {
        errors.push(msg);
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(v.to_string()))
    }
}

fn require_bivariate(r: &AdditionFormula) -> Result<()> {
    match r.arity() {
        Arity::Bivariate => Ok(()),
        Arity::Double => Err(Error::InvalidConfig(format!("{} is not bivariate", r.name))),
    }
}

fn step(z: f64) -> f64 {
    FD_STEP * z.abs().max(1.0)
}

/// Central difference of `R` in `x` at `(x, y)` with step `h`.
pub fn fd_dx(r: &AdditionFormula, x: f64, y: f64, h: f64) -> Result<f64> {
    finite((r.eval2(x + h, y)? - r.eval2(x - h, y)?) / (2.0 * h))
}

/// Central difference of `R` in `y` at `(x, y)` with step `h`.
pub fn fd_dy(r: &AdditionFormula, x: f64, y: f64, h: f64) -> Result<f64> {
    finite((r.eval2(x, y + h)? - r.eval2(x, y - h)?) / (2.0 * h))
}

/// Checks symmetry, identity, cross partials and associativity on
/// `grid × grid` (and `grid³` for associativity). Point failures are
/// counted as skipped, never fatal.
pub fn check_necessary(r: &AdditionFormula, x0: f64, grid: &[f64], tol: f64) -> Result<CheckReport> {
    require_bivariate(r)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut errors = Vec::new();
    let mut sym = Tally::new("symmetry");
    let mut ident = Tally::new("identity");
    let mut cross = Tally::new("cross_partial");
    let mut assoc = Tally::new("associativity");

    for &x in grid {
        for &y in grid {
            let res = r.eval2(x, y).and_then(|a| Ok((a - r.eval2(y, x)?).abs()));
            sym.record(res, &[x, y], &mut errors);
        }
    }
    for &y in grid {
        let res = r
            .eval2(x0, y)
            .and_then(|a| Ok((a - y).abs().max((r.eval2(y, x0)? - y).abs())));
        ident.record(res, &[y], &mut errors);
    }
    for &z in grid {
        let h = step(z);
        let res = fd_dx(r, x0, z, h).and_then(|a| Ok((a - fd_dy(r, z, x0, h)?).abs()));
        cross.record(res, &[z], &mut errors);
    }
    for &x in grid {
        for &y in grid {
            for &z in grid {
                let res = (|| {
                    let left = r.eval2(r.eval2(x, y)?, z)?;
                    let right = r.eval2(x, r.eval2(y, z)?)?;
                    Ok((left - right).abs())
                })();
                assoc.record(res, &[x, y, z], &mut errors);
            }
        }
    }
    let conditions: Vec<ConditionResult> =
        [sym, ident, cross, assoc].into_iter().map(|t| t.finish(tol)).collect();
    let total: usize = conditions.iter().map(|c| c.evaluated + c.skipped).sum();
    let ok: usize = conditions.iter().map(|c| c.evaluated).sum();
    Ok(CheckReport {
        conditions,
        grid: format!("{} values in [{}, {}]", grid.len(), min(grid), max(grid)),
        tolerance: tol,
        coverage: ok as f64 / total as f64,
        errors,
    })
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `f(z) = R_x(x0, z) x'(0)`, the right-hand side generated by `R`.
#[derive(Clone)]
pub struct DerivedRhs {
    eval: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
    /// True when `R` supplied exact partials; otherwise central differences
    /// with `O(h²)` error, `h = 1e-6 max(1, |x0|)`.
    pub exact: bool,
}

impl DerivedRhs {
    pub fn eval(&self, z: f64) -> Result<f64> {
        (self.eval)(z)
    }
}

pub fn derive_f(r: &AdditionFormula, x0: f64, xdot0: f64) -> Result<DerivedRhs> {
    require_bivariate(r)?;
    let r = r.clone();
    let exact = r.exact_partials(x0, x0).is_some();
    let h = step(x0);
    Ok(DerivedRhs {
        eval: Arc::new(move |z| {
            let dx = match r.exact_partials(x0, z) {
                Some(p) => p?.0,
                None => fd_dx(&r, x0, z, h)?,
            };
            finite(dx * xdot0)
        }),
        exact,
    })
}

/// Chain-rule residual and end-to-end addition law along the solution of the
/// derived ODE with `x'(0) = 1`, for all pairs from `grid_t`.
pub fn check_sufficient(
    r: &AdditionFormula,
    x0: f64,
    grid_t: &[f64],
    tol: f64,
) -> Result<CheckReport> {
    require_bivariate(r)?;
    if grid_t.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut errors = Vec::new();
    let mut chain = Tally::new("derivative_chain");
    let mut e2e = Tally::new("end_to_end");
    let pairs = grid_t.len() * grid_t.len();

    let f = derive_f(r, x0, 1.0)?;
    let rhs = |z: f64| f.eval(z);
    let sums = grid_t.iter().flat_map(|&t| grid_t.iter().map(move |&s| t + s));
    let hi = grid_t.iter().copied().chain(sums.clone()).fold(0.0f64, f64::max);
    let lo = grid_t.iter().copied().chain(sums).fold(0.0f64, f64::min);
    let forward = (hi > 0.0).then(|| dp45_solve_fn(&rhs, x0, hi, INTEGRATOR_TOL, INTEGRATOR_TOL));
    let backward = (lo < 0.0).then(|| dp45_solve_fn(&rhs, x0, lo, INTEGRATOR_TOL, INTEGRATOR_TOL));
    for (dir, sol) in [("forward", &forward), ("backward", &backward)] {
        if let Some(Err(e)) = sol {
            log(&mut errors, format!("{dir} integration failed: {e}"));
        }
    }
    let x_at = |t: f64| -> Result<f64> {
        let sol = if t >= 0.0 { &forward } else { &backward };
        match sol {
            _ if t == 0.0 => Ok(x0),
            Some(Ok(s)) => s.eval(t),
            Some(Err(e)) => Err(e.clone()),
            None => Err(Error::Domain(format!("t = {t} not integrated"))),
        }
    };

    let mut covered = 0usize;
    for &t in grid_t {
        for &s in grid_t {
            let point = [t, s];
            let xt = x_at(t);
            let xs = x_at(s);
            let chain_res = (|| {
                let (a, b) = (xt.clone()?, xs.clone()?);
                let rab = r.eval2(a, b)?;
                let lhs = fd_dx(r, a, b, step(a))? * fd_dx(r, x0, a, step(x0))?;
                let rhs = fd_dx(r, x0, rab, step(x0))?;
                Ok((lhs - rhs).abs())
            })();
            let e2e_res = (|| Ok((x_at(t + s)? - r.eval2(xt.clone()?, xs.clone()?)?).abs()))();
            if chain_res.is_ok() && e2e_res.is_ok() {
                covered += 1;
            }
            chain.record(chain_res, &point, &mut errors);
            e2e.record(e2e_res, &point, &mut errors);
        }
    }
    Ok(CheckReport {
        conditions: vec![chain.finish(tol), e2e.finish(tol)],
        grid: format!("{} times in [{}, {}], pairs (t, τ)", grid_t.len(), min(grid_t), max(grid_t)),
        tolerance: tol,
        coverage: covered as f64 / pairs as f64,
        errors,
    })
}

/// `n` evenly spaced values on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| if i + 1 == n { b } else { a + (b - a) * (i as f64 / (n - 1) as f64) })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{exponential_formula, power_rule_addition, root_rule_addition};
    use crate::expr::ExprAst;

    fn expr(src: &str, x0: f64) -> AdditionFormula {
        AdditionFormula::from_expr(ExprAst::parse_bivariate(src).unwrap(), x0, src).unwrap()
    }

    fn opaque(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, x0: f64) -> AdditionFormula {
        AdditionFormula::bivariate("opaque", x0, "", move |x, y| Ok(f(x, y)))
    }

    #[test]
    fn product_and_sum_pass() {
        let g = linspace(0.5, 2.0, 7);
        let rep = check_necessary(&opaque(|x, y| x * y, 1.0), 1.0, &g, 1e-9).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert_eq!(rep.coverage, 1.0);
        let rep = check_necessary(&opaque(|x, y| x + y, 0.0), 0.0, &g, 1e-9).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn planted_asymmetry_is_named() {
        let g = linspace(0.5, 2.0, 7);
        let rep = check_necessary(&expr("x*y + 0.001*x^2", 1.0), 1.0, &g, 1e-9).unwrap();
        let sym = rep.condition("symmetry").unwrap();
        assert!(!sym.pass);
        // 0.001 max |x² - y²| over the grid
        assert!((sym.max_residual - 0.001 * (4.0 - 0.25)).abs() < 1e-12);
        assert!(rep.failed().contains(&"symmetry"));
    }

    #[test]
    fn errors_are_counted_not_fatal() {
        let r = opaque(|x, y| if x > 1.5 { f64::NAN } else { x * y }, 1.0);
        let rep = check_necessary(&r, 1.0, &linspace(0.5, 2.0, 4), 1e-9).unwrap();
        assert!(rep.coverage < 1.0 && rep.coverage > 0.0);
        assert!(rep.condition("symmetry").unwrap().skipped > 0);
        assert!(!rep.errors.is_empty());
        assert_eq!(check_necessary(&r, 1.0, &[], 1e-9).unwrap_err(), Error::EmptyGrid);
    }

    #[test]
    fn derived_rhs() {
        let f = derive_f(&opaque(|x, y| x * y, 1.0), 1.0, 1.0).unwrap();
        assert!(!f.exact);
        for z in [0.5, 1.0, 3.0] {
            assert!((f.eval(z).unwrap() - z).abs() <= 1e-8);
        }
        let f = derive_f(&opaque(|x, y| x + y, 0.0), 0.0, 2.5).unwrap();
        assert!((f.eval(7.0).unwrap() - 2.5).abs() <= 1e-8);
        let f = derive_f(&power_rule_addition(1, 1.0).unwrap(), 1.0, 1.0).unwrap();
        assert!(f.exact);
        for z in linspace(0.5, 1.5, 11) {
            assert!((f.eval(z).unwrap() - z * z).abs() <= 1e-6);
        }
        // the difference route agrees with the exact one
        let e = expr("x*y + x*y*(x - 1)", 1.0);
        let fe = derive_f(&e, 1.0, 1.0).unwrap();
        let fd = derive_f(&opaque(|x, y| x * y + x * y * (x - 1.0), 1.0), 1.0, 1.0).unwrap();
        for z in [0.6, 1.3] {
            assert!((fe.eval(z).unwrap() - fd.eval(z).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn sufficient_conditions() {
        let ts = linspace(0.0, 0.5, 6);
        let rep = check_sufficient(&exponential_formula(), 1.0, &ts, 1e-6).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert!(rep.condition("end_to_end").unwrap().max_residual <= 1e-8);
        let rep = check_sufficient(&root_rule_addition(1, 1.0).unwrap(), 1.0, &ts, 1e-6).unwrap();
        assert!(rep.condition("end_to_end").unwrap().max_residual <= 1e-7, "{rep:?}");
        // both time directions
        let ts = linspace(-0.4, 0.4, 5);
        let rep = check_sufficient(&exponential_formula(), 1.0, &ts, 1e-6).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert_eq!(rep.coverage, 1.0);
    }

    #[test]
    fn defect_preserving_identity_is_caught_end_to_end() {
        let r = expr("x*y + 0.01*(x-1)^2*(y-1)^2", 1.0);
        let g = linspace(0.5, 2.0, 6);
        let nec = check_necessary(&r, 1.0, &g, 1e-6).unwrap();
        assert!(nec.condition("symmetry").unwrap().pass);
        assert!(nec.condition("identity").unwrap().pass);
        let suf = check_sufficient(&r, 1.0, &linspace(0.0, 0.5, 6), 1e-6).unwrap();
        assert!(suf.condition("end_to_end").unwrap().max_residual > 1e-3);
    }

    #[test]
    fn report_serializes() {
        let rep = check_necessary(&exponential_formula(), 1.0, &[1.0, 2.0], 1e-9).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: CheckReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }
}
