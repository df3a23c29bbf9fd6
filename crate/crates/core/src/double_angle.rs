//! Taylor expansion of the double-angle formula `R`, `x(2t) = R(x(t))`, about
//! `x0`, and iteration of any double-angle map.
//!
//! Differentiating `x(2t) = R(x(t))` and substituting the ODE gives
//! `2 f(R(u)) = R'(u) f(u)`. With `R(x0) = x0` and `R'(x0) = 2`, the
//! coefficient of `(u - x0)^k` of that identity is linear in `r_{k+1}` with
//! slope `-(k+1) f(x0)`, so the coefficients follow one division at a time.

use crate::error::{Error, Result};
use crate::expr::ExprAst;
use crate::jet::{factorial, Jet, MAX_ORDER};

/// Default order of the double-angle polynomial.
pub const DEFAULT_M2: usize = 20;

/// Highest order covered by the closed-form derivative table.
pub const CLOSED_FORM_MAX_ORDER: usize = 10;

/// Anything usable as `R` in `x(2t) = R(x(t))`.
pub trait DoubleAngleMap: Send + Sync {
    fn apply(&self, x: f64) -> Result<f64>;
}

impl<F> DoubleAngleMap for F
where
    F: Fn(f64) -> Result<f64> + Send + Sync,
{
    fn apply(&self, x: f64) -> Result<f64> {
        self(x)
    }
}

/// A univariate expression in `x` used as an exact double-angle formula.
impl DoubleAngleMap for ExprAst {
    fn apply(&self, x: f64) -> Result<f64> {
        self.eval_scalar(x)
    }
}

/// Taylor coefficients of `R` about `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleAngleSeries {
    pub x0: f64,
    pub coeffs: Vec<f64>,
}

impl DoubleAngleSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation of the polynomial at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.x0;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// `k`-th derivative `R^(k)(x0)`.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coeffs[k] * factorial(k)
    }

    /// Root-test estimate of the convergence radius from the upper half of
    /// the coefficients. Indicative only; nothing certifies it.
    pub fn radius_estimate(&self) -> f64 {
        let m = self.order();
        (m / 2 + 1..=m)
            .filter(|&k| k >= 2 && self.coeffs[k] != 0.0)
            .map(|k| self.coeffs[k].abs().powf(-1.0 / k as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn as_jet(&self) -> Jet {
        Jet::from_coeffs(self.x0, self.coeffs.clone())
    }
}

impl DoubleAngleMap for DoubleAngleSeries {
    fn apply(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x))
    }
}

fn f_at(f: &ExprAst, x0: f64) -> Result<f64> {
    let f0 = f.eval_scalar(x0)?;
    if f0 == 0.0 {
        return Err(Error::DegenerateProblem { x0 });
    }
    Ok(f0)
}

/// General route: solves `2 f(R) - R' f = 0` order by order, any `m2 <= 64`.
pub fn taylor_general(f: &ExprAst, x0: f64, m2: usize) -> Result<DoubleAngleSeries> {
    if m2 == 0 {
        return Err(Error::InvalidConfig("m2 must be at least 1".into()));
    }
    if m2 > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            order: m2,
            max: MAX_ORDER,
        });
    }
    let f0 = f_at(f, x0)?;
    let fj = f.eval_jet(&Jet::variable(x0, m2))?;
    let fc = fj.coeffs();
    let mut r = vec![0.0; m2 + 1];
    r[0] = x0;
    r[1] = 2.0;
    for k in 1..m2 {
        // r_{k+1} is still zero here, so this is the known part of 2 f(R)
        let f_of_r = Jet::compose(&fj, &Jet::from_coeffs(x0, r.clone()))?;
        let cross: f64 = (0..k).map(|j| (j + 1) as f64 * r[j + 1] * fc[k - j]).sum();
        let known = 2.0 * f_of_r.coeffs()[k] - cross;
        r[k + 1] = known / ((k + 1) as f64 * f0);
    }
    Ok(DoubleAngleSeries { x0, coeffs: r })
}

/// Closed-form route: the explicit expressions for `R^(k)(x0)`, `k <= 10`,
/// written in terms of `f^(j)(x0)`.
pub fn taylor_closed_form(f: &ExprAst, x0: f64, m2: usize) -> Result<DoubleAngleSeries> {
    if m2 > CLOSED_FORM_MAX_ORDER {
        return Err(Error::OrderTooHigh {
            order: m2,
            max: CLOSED_FORM_MAX_ORDER,
        });
    }
    if m2 == 0 {
        return Err(Error::InvalidConfig("m2 must be at least 1".into()));
    }
    f_at(f, x0)?;
    let fj = f.eval_jet(&Jet::variable(x0, 9))?;
    let d: Vec<f64> = (0..=9).map(|k| fj.derivative_at_center(k)).collect();
    let raw = closed_form_derivatives(&d);
    let mut coeffs: Vec<f64> = (0..=m2).map(|k| raw[k] / factorial(k)).collect();
    coeffs[0] = x0;
    Ok(DoubleAngleSeries { x0, coeffs })
}

/// `R^(k)(x0)` for `k = 0..=10` (entry 0 is a placeholder for `x0`), given
/// `d[j] = f^(j)(x0)`, `j = 0..=9`.
#[allow(clippy::many_single_char_names)]
fn closed_form_derivatives(d: &[f64]) -> [f64; 11] {
    let f = d[0];
    let (f1, f2, f3, f4, f5, f6, f7, f8, f9) =
        (d[1], d[2], d[3], d[4], d[5], d[6], d[7], d[8], d[9]);
    let mut r = [0.0; 11];
    r[1] = 2.0;
    r[2] = 2.0 * f1 / f;
    r[3] = 6.0 * f2 / f;
    r[4] = 2.0 / (f * f) * (7.0 * f3 * f + 6.0 * f1 * f2);
    r[5] = 30.0 * (f * f4 + 2.0 * f2 * f2 + 2.0 * f3 * f1) / (f * f);
    r[6] = (62.0 * f5 * f * f
        + 20.0 * (28.0 * f * f3 * f2 + 3.0 * f3 * f1 * f1 + f1 * (11.0 * f * f4 + 9.0 * f2 * f2)))
        / f.powi(3);
    r[7] = 14.0 / f.powi(3)
        * (9.0 * f6 * f * f
            + 10.0
                * (9.0 * f2.powi(3)
                    + 4.0 * f4 * f1 * f1
                    + 5.0 * f * (2.0 * f3 * f3 + f5 * f1)
                    + (15.0 * f * f4 + 23.0 * f3 * f1) * f2));
    r[8] = (254.0 * f7 * f.powi(3)
        + 28.0
            * (20.0 * f4 * f1.powi(3)
                + f * (251.0 * f * f5 * f2 + 5.0 * f3 * (81.0 * f * f4 + 199.0 * f2 * f2))
                + 5.0 * f1 * f1 * (23.0 * f * f5 + 32.0 * f3 * f2)
                + f1 * (180.0 * f2.powi(3)
                    + f * (73.0 * f * f6 + 455.0 * f3 * f3)
                    + 715.0 * f * f4 * f2)))
        / f.powi(4);
    r[9] = (510.0 * f8 * f.powi(3)
        + 84.0
            * (540.0 * f2.powi(4)
                + 90.0 * f5 * f1.powi(3)
                + 6.0 * (29.0 * f * f6 + 75.0 * f3 * f3) * f1 * f1
                + f * f * (295.0 * f4 * f4 + 488.0 * f3 * f5)
                + f * (67.0 * f * f7 + 1820.0 * f3 * f4) * f1
                + 270.0 * (7.0 * f * f4 + 9.0 * f3 * f1) * f2 * f2
                + 2.0
                    * (405.0 * f4 * f1 * f1
                        + f * (130.0 * f * f6 + 1235.0 * f3 * f3 + 603.0 * f5 * f1))
                    * f2))
        / f.powi(4);
    r[10] = 2.0 / f.powi(5)
        * (511.0 * f9 * f.powi(4)
            + 3780.0 * f5 * f1.powi(4)
            + 252.0 * f1.powi(3) * (117.0 * f * f6 + 75.0 * f3 * f3 + 175.0 * f4 * f2)
            + 12.0
                * f
                * (78330.0 * f3 * f2.powi(3)
                    + 7.0
                        * f
                        * (3170.0 * f3.powi(3) + 4647.0 * f5 * f2 * f2 + 14440.0 * f4 * f3 * f2)
                    + f * f * (2679.0 * f7 * f2 + 5726.0 * f3 * f6 + 8029.0 * f4 * f5))
            + 42.0
                * f1
                * f1
                * (7158.0 * f * f5 * f2
                    + 4350.0 * f3 * f2 * f2
                    + f * (683.0 * f * f7 + 9530.0 * f3 * f4))
            + 6.0
                * f1
                * (18900.0 * f2.powi(4)
                    + 158340.0 * f * f4 * f2 * f2
                    + 14.0 * f * (2648.0 * f * f6 + 13805.0 * f3 * f3) * f2
                    + f * f * (1237.0 * f * f8 + 38115.0 * f4 * f4 + 64974.0 * f3 * f5)));
    r
}

/// Horner evaluation of the truncated `R` at `x`.
pub fn eval_r(series: &DoubleAngleSeries, x: f64) -> f64 {
    series.eval(x)
}

/// Applies `map` `n` times to `x`; `n = 0` returns `x`.
///
/// Fails with the 1-based index of the failing application, and treats a
/// non-finite intermediate as a failure.
pub fn iterate_r<M: DoubleAngleMap + ?Sized>(map: &M, x: f64, n: u32) -> Result<f64> {
    let mut v = x;
    for i in 1..=n {
        v = map.apply(v).map_err(|e| Error::Iteration {
            index: i,
            source: Box::new(e),
        })?;
        if !v.is_finite() {
            return Err(Error::Iteration {
                index: i,
                source: Box::new(Error::NonFinite(format!("R produced {v}"))),
            });
        }
    }
    Ok(v)
}
