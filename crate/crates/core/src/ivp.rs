//! Taylor polynomial of the solution of `x' = f(x), x(0) = x0` at `t = 0`.

use crate::error::{Error, Result};
use crate::expr::ExprAst;
use crate::jet::{Jet, MAX_ORDER};

/// Default order of the seed polynomial.
pub const DEFAULT_M1: usize = 20;

/// Below this |f(x0)| the seed coefficients blow up; reported, not rejected.
pub const NEAR_DEGENERATE: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct IvpProblem {
    pub f: ExprAst,
    pub x0: f64,
    pub label: String,
}

impl IvpProblem {
    pub fn new(f: ExprAst, x0: f64, label: impl Into<String>) -> Result<Self> {
        if f.max_var().is_some_and(|v| v > 0) {
            return Err(Error::InvalidConfig(
                "f must be univariate in x".into(),
            ));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidConfig(format!("x0 = {x0} is not finite")));
        }
        Ok(IvpProblem {
            f,
            x0,
            label: label.into(),
        })
    }

    /// Parses `f` and builds the problem.
    pub fn from_source(f: &str, x0: f64, label: impl Into<String>) -> Result<Self> {
        Self::new(ExprAst::parse(f)?, x0, label)
    }

    pub fn rhs(&self, x: f64) -> Result<f64> {
        self.f.eval_scalar(x)
    }
}

/// Taylor coefficients of `x(t)` about `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSeries {
    pub x0: f64,
    pub coeffs: Vec<f64>,
    /// True iff `f(x0) == 0`, in which case the solution is constant.
    pub degenerate: bool,
    /// `f(x0)`, kept for diagnostics.
    pub f_at_x0: f64,
}

impl SolutionSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn near_degenerate(&self) -> bool {
        !self.degenerate && self.f_at_x0.abs() < NEAR_DEGENERATE
    }

    /// Horner evaluation at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn as_jet(&self) -> Jet {
        Jet::from_coeffs(0.0, self.coeffs.clone())
    }
}

fn check_order(m1: usize) -> Result<()> {
    if m1 == 0 {
        return Err(Error::InvalidConfig("m1 must be at least 1".into()));
    }
    if m1 > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            order: m1,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

fn degenerate(problem: &IvpProblem, m1: usize, f0: f64) -> Option<SolutionSeries> {
    (f0 == 0.0).then(|| {
        let mut coeffs = vec![0.0; m1 + 1];
        coeffs[0] = problem.x0;
        SolutionSeries {
            x0: problem.x0,
            coeffs,
            degenerate: true,
            f_at_x0: f0,
        }
    })
}

/// Builds `x_{m1}(t)`.
///
/// When `f = sqrt(g)` the series is generated from the equivalent second
/// order problem `x'' = g'(x) / 2`, `x'(0) = sqrt(g(x0))`: the direct sqrt
/// recursion divides by `sqrt(g(x(0)))` at every order and loses all accuracy
/// when `f(x0)` is small. Every other `f` goes through [`solve_taylor_direct`].
pub fn solve_taylor(problem: &IvpProblem, m1: usize) -> Result<SolutionSeries> {
    match problem.f.sqrt_radicand() {
        Some(g) => solve_taylor_sqrt(problem, &g, m1),
        None => solve_taylor_direct(problem, m1),
    }
}

/// Order-by-order recursion `(k+1) x_{k+1} = [f(x(t))]_k` through jets of `f`.
pub fn solve_taylor_direct(problem: &IvpProblem, m1: usize) -> Result<SolutionSeries> {
    check_order(m1)?;
    let f0 = problem.rhs(problem.x0)?;
    if let Some(s) = degenerate(problem, m1, f0) {
        return Ok(s);
    }
    let mut coeffs = vec![0.0; m1 + 1];
    coeffs[0] = problem.x0;
    for k in 0..m1 {
        // only x_0..x_k are known; coefficient k of f(x(t)) depends on nothing else
        let xj = Jet::from_coeffs(0.0, coeffs[..=k].to_vec());
        let fx = problem.f.eval_jet(&xj)?;
        coeffs[k + 1] = fx.coeffs()[k] / (k + 1) as f64;
    }
    Ok(SolutionSeries {
        x0: problem.x0,
        coeffs,
        degenerate: false,
        f_at_x0: f0,
    })
}

fn solve_taylor_sqrt(problem: &IvpProblem, radicand: &ExprAst, m1: usize) -> Result<SolutionSeries> {
    check_order(m1)?;
    let f0 = problem.rhs(problem.x0)?;
    if let Some(s) = degenerate(problem, m1, f0) {
        return Ok(s);
    }
    let mut coeffs = vec![0.0; m1 + 1];
    coeffs[0] = problem.x0;
    coeffs[1] = f0;
    if m1 >= 2 {
        // g'(x) about x0, as a jet of order m1 - 2 (all that the recursion reads)
        let g = radicand.eval_jet(&Jet::variable(problem.x0, m1 - 1))?;
        let dg = g.derivative();
        for k in 0..=m1 - 2 {
            let xj = Jet::from_coeffs(0.0, coeffs[..=m1 - 2].to_vec());
            let dgx = Jet::compose(&dg, &xj)?;
            coeffs[k + 2] = dgx.coeffs()[k] / (2.0 * ((k + 1) * (k + 2)) as f64);
        }
    }
    Ok(SolutionSeries {
        x0: problem.x0,
        coeffs,
        degenerate: false,
        f_at_x0: f0,
    })
}

/// Horner evaluation of the seed polynomial.
pub fn eval_series(series: &SolutionSeries, t: f64) -> f64 {
    series.eval(t)
}
