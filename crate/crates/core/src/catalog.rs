//! Explicit addition and double-angle formulas with known closed forms, and
//! the numeric construction `R(x, y) = φ(φ⁻¹(x) + φ⁻¹(y))` from a monotone
//! sampled `φ`.

use std::fmt;
use std::sync::Arc;

use crate::double_angle::DoubleAngleMap;
use crate::error::{Error, Result};
use crate::expr::ExprAst;
use crate::jet::Jet;

type Eval1 = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;
type Eval2 = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;
type Partials = Arc<dyn Fn(f64, f64) -> Result<(f64, f64)> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Double,
    Bivariate,
}

#[derive(Clone)]
enum Evaluator {
    Double(Eval1),
    Bivariate(Eval2),
}

/// `R(x, y)` with `φ(t + τ) = R(φ(t), φ(τ))`, or its diagonal `R(x)`.
#[derive(Clone)]
pub struct AdditionFormula {
    pub name: String,
    evaluator: Evaluator,
    /// Human-readable region on which the evaluator is total.
    pub validity: String,
    /// `φ(0)`, the identity element of `R`.
    pub x0: f64,
    partials: Option<Partials>,
}

impl fmt::Debug for AdditionFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdditionFormula")
            .field("name", &self.name)
            .field("arity", &self.arity())
            .field("validity", &self.validity)
            .field("x0", &self.x0)
            .finish()
    }
}

impl AdditionFormula {
    pub fn bivariate(
        name: impl Into<String>,
        x0: f64,
        validity: impl Into<String>,
        eval: impl Fn(f64, f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        AdditionFormula {
            name: name.into(),
            evaluator: Evaluator::Bivariate(Arc::new(eval)),
            validity: validity.into(),
            x0,
            partials: None,
        }
    }

    pub fn double(
        name: impl Into<String>,
        x0: f64,
        validity: impl Into<String>,
        eval: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        AdditionFormula {
            name: name.into(),
            evaluator: Evaluator::Double(Arc::new(eval)),
            validity: validity.into(),
            x0,
            partials: None,
        }
    }

    /// Attaches exact `(∂x R, ∂y R)`.
    pub fn with_partials(
        mut self,
        partials: impl Fn(f64, f64) -> Result<(f64, f64)> + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn arity(&self) -> Arity {
        match self.evaluator {
            Evaluator::Double(_) => Arity::Double,
            Evaluator::Bivariate(_) => Arity::Bivariate,
        }
    }

    /// `R(x, y)`; only defined for bivariate formulas.
    pub fn eval2(&self, x: f64, y: f64) -> Result<f64> {
        match &self.evaluator {
            Evaluator::Bivariate(r) => r(x, y),
            Evaluator::Double(_) => Err(Error::InvalidConfig(format!(
                "{} is a double-angle formula, not bivariate",
                self.name
            ))),
        }
    }

    /// Double-angle value: `R(x)`, or `R(x, x)` for a bivariate formula.
    pub fn eval1(&self, x: f64) -> Result<f64> {
        match &self.evaluator {
            Evaluator::Double(r) => r(x),
            Evaluator::Bivariate(r) => r(x, x),
        }
    }

    /// Exact partials when the formula carries them.
    pub fn exact_partials(&self, x: f64, y: f64) -> Option<Result<(f64, f64)>> {
        self.partials.as_ref().map(|p| p(x, y))
    }

    /// `(1 + δ) R`, for sensitivity checks.
    pub fn perturbed(&self, delta: f64) -> Self {
        let name = format!("{} * (1 + {delta:e})", self.name);
        match &self.evaluator {
            Evaluator::Bivariate(r) => {
                let r = r.clone();
                AdditionFormula::bivariate(name, self.x0, self.validity.clone(), move |x, y| {
                    Ok((1.0 + delta) * r(x, y)?)
                })
            }
            Evaluator::Double(r) => {
                let r = r.clone();
                AdditionFormula::double(name, self.x0, self.validity.clone(), move |x| {
                    Ok((1.0 + delta) * r(x)?)
                })
            }
        }
    }

    /// A bivariate formula from an expression in `x` and `y`, with exact
    /// partials through jets.
    pub fn from_expr(ast: ExprAst, x0: f64, name: impl Into<String>) -> Result<Self> {
        if ast.vars().len() < 2 && ast.max_var().is_some_and(|v| v > 0) {
            return Err(Error::InvalidConfig("expected variables x, y".into()));
        }
        let ast = Arc::new(ast);
        let (a, b) = (ast.clone(), ast.clone());
        Ok(AdditionFormula::bivariate(name, x0, "where the expression evaluates", move |x, y| {
            a.eval_scalar2(x, y)
        })
        .with_partials(move |x, y| {
            let dx = b.eval_jet2(&Jet::variable(x, 1), &Jet::constant(x, y, 1))?;
            let dy = b.eval_jet2(&Jet::constant(y, x, 1), &Jet::variable(y, 1))?;
            Ok((dx.coeffs()[1], dy.coeffs()[1]))
        }))
    }
}

impl DoubleAngleMap for AdditionFormula {
    fn apply(&self, x: f64) -> Result<f64> {
        self.eval1(x)
    }
}

/// `R(x, y) = x y`, the addition formula of `e^t`.
pub fn exponential_formula() -> AdditionFormula {
    AdditionFormula::bivariate("exponential", 1.0, "all real x, y", |x, y| Ok(x * y))
        .with_partials(|x, y| Ok((y, x)))
}

/// Real `n`-th root; odd roots keep the sign.
fn real_root(v: f64, n: u32) -> Result<f64> {
    if v >= 0.0 {
        Ok(v.powf(1.0 / n as f64))
    } else if n % 2 == 1 {
        Ok(-(-v).powf(1.0 / n as f64))
    } else {
        Err(Error::Domain(format!("even root of negative value {v}")))
    }
}

/// Addition formula of `x' = x^(n+1)`, `x(0) = x0`:
/// `R(x, y) = x0 x y / (x0^n (x^n + y^n) - x^n y^n)^(1/n)`.
pub fn power_rule_addition(n: u32, x0: f64) -> Result<AdditionFormula> {
    if n == 0 || x0 == 0.0 || !x0.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "power rule needs n >= 1 and finite x0 != 0 (n = {n}, x0 = {x0})"
        )));
    }
    let ni = n as i32;
    let c = x0.powi(ni);
    let radicand = move |x: f64, y: f64| {
        let (xn, yn) = (x.powi(ni), y.powi(ni));
        let d = c * (xn + yn) - xn * yn;
        if d == 0.0 {
            return Err(Error::Pole(format!("R({x}, {y}) is singular")));
        }
        if d < 0.0 && n.is_multiple_of(2) {
            return Err(Error::Domain(format!("radicand {d} < 0 at ({x}, {y})")));
        }
        Ok(d)
    };
    let eval = move |x: f64, y: f64| Ok(x0 * x * y / real_root(radicand(x, y)?, n)?);
    let partials = move |x: f64, y: f64| {
        let d = radicand(x, y)?;
        let root = real_root(d, n)?;
        let r = x0 * x * y / root;
        // ∂x R = R / x - R (x^(n-1) (c - y^n)) / d
        let px = x0 * y / root - r * x.powi(ni - 1) * (c - y.powi(ni)) / d;
        let py = x0 * x / root - r * y.powi(ni - 1) * (c - x.powi(ni)) / d;
        Ok((px, py))
    };
    Ok(AdditionFormula::bivariate(
        format!("power rule n={n}"),
        x0,
        format!("x0^{n} (x^{n} + y^{n}) - x^{n} y^{n} > 0"),
        eval,
    )
    .with_partials(partials))
}

/// Addition formula of `x' = x^(1/(n+1))`, `x(0) = x0 > 0`:
/// `R(x, y) = (x^p - x0^p + y^p)^(1/p)` with `p = n/(n+1)`.
pub fn root_rule_addition(n: u32, x0: f64) -> Result<AdditionFormula> {
    if n == 0 || !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "root rule needs n >= 1 and finite x0 > 0 (n = {n}, x0 = {x0})"
        )));
    }
    let p = n as f64 / (n + 1) as f64;
    let c = x0.powf(p);
    let inner = move |x: f64, y: f64| {
        if x < 0.0 || y < 0.0 {
            return Err(Error::Domain(format!("negative argument in ({x}, {y})")));
        }
        let s = x.powf(p) - c + y.powf(p);
        if s < 0.0 {
            return Err(Error::Domain(format!("inner sum {s} < 0 at ({x}, {y})")));
        }
        Ok(s)
    };
    let eval = move |x: f64, y: f64| Ok(inner(x, y)?.powf(1.0 / p));
    let partials = move |x: f64, y: f64| {
        let g = inner(x, y)?.powf(1.0 / p - 1.0);
        Ok((g * x.powf(p - 1.0), g * y.powf(p - 1.0)))
    };
    Ok(AdditionFormula::bivariate(
        format!("root rule n={n}"),
        x0,
        format!("x, y >= 0 and x^{p} + y^{p} >= x0^{p}"),
        eval,
    )
    .with_partials(partials))
}

/// Double-angle formula of `x' = x^2`: `R(x) = x0 x / (2 x0 - x)`.
pub fn example1_double(x0: f64) -> Result<AdditionFormula> {
    if x0 == 0.0 || !x0.is_finite() {
        return Err(Error::InvalidConfig(format!("x0 = {x0} must be finite and nonzero")));
    }
    Ok(AdditionFormula::double(
        "example 1 double-angle",
        x0,
        format!("x != {}", 2.0 * x0),
        move |x| {
            let d = 2.0 * x0 - x;
            if d == 0.0 {
                return Err(Error::Pole(format!("R has its pole at x = {x}")));
            }
            Ok(x0 * x / d)
        },
    ))
}

struct WeierstrassParts {
    rad: f64,
    q: f64,
    p2: f64,
    p3: f64,
}

/// `864x³ - 234x - 35` in factored form `864 (x - 7/12)(x + 5/12)(x + 1/6)`.
fn weierstrass_parts(x: f64) -> WeierstrassParts {
    WeierstrassParts {
        rad: 864.0 * (x - 7.0 / 12.0) * (x + 5.0 / 12.0) * (x + 1.0 / 6.0),
        q: 144.0 * x * x - 168.0 * x - 59.0,
        p2: 144.0 * x * x + 120.0 * x - 11.0,
        p3: 12.0 * x - 7.0,
    }
}

fn weierstrass_params(epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon <= 0.25) {
        return Err(Error::InvalidConfig(format!("ε = {epsilon} outside (0, 1/4]")));
    }
    let beta2 = 4.0 * (6.0 * epsilon - 24.0 * epsilon * epsilon);
    Ok(((1.0 - epsilon).sqrt(), beta2.max(0.0).sqrt()))
}

/// Double-angle formula of `x(t) = 7/12 - dn(t + δ | 1/4)^2`:
///
/// `R(x) = 7/12 - ((α P2 (P2 - 6 P3) - β P1) / (P2² - 96 ε S))²`
///
/// with `S = 864x³ - 234x - 35`, `P1 = √S (144x² - 168x - 59)` (the quadratic
/// keeps its sign), `P2 = 144x² + 120x - 11`, `P3 = 12x - 7`,
/// `α = √(1-ε)`, `β = 2√(6ε - 24ε²)`. Valid on the range `[-5/12, -1/6]`
/// of the increasing branch.
pub fn weierstrass_double(epsilon: f64) -> Result<AdditionFormula> {
    let (alpha, beta) = weierstrass_params(epsilon)?;
    Ok(AdditionFormula::double(
        format!("weierstrass double-angle eps={epsilon:e}"),
        -5.0 / 12.0 + epsilon,
        "-5/12 <= x <= -1/6",
        move |x| {
            let w = weierstrass_parts(x);
            if w.rad < 0.0 {
                return Err(Error::Domain(format!("864x³-234x-35 = {} < 0 at x = {x}", w.rad)));
            }
            let p1 = w.rad.sqrt() * w.q;
            let den = w.p2 * w.p2 - 96.0 * epsilon * w.rad;
            if den == 0.0 {
                return Err(Error::DivisionByZero);
            }
            let v = (alpha * w.p2 * (w.p2 - 6.0 * w.p3) - beta * p1) / den;
            Ok(7.0 / 12.0 - v * v)
        },
    ))
}

/// The same formula with `P1 = √(S q²)` (unsigned) and denominator
/// `P2² - 96 ε P1²`. It misses `R(x0) = x0` by about `8e-6` at `ε = 1e-6`
/// and is kept only to document that.
pub fn weierstrass_double_as_printed(epsilon: f64) -> Result<AdditionFormula> {
    let (alpha, beta) = weierstrass_params(epsilon)?;
    Ok(AdditionFormula::double(
        format!("weierstrass double-angle (unsigned P1) eps={epsilon:e}"),
        -5.0 / 12.0 + epsilon,
        "-5/12 <= x <= -1/6",
        move |x| {
            let w = weierstrass_parts(x);
            let prod = w.rad * w.q * w.q;
            if prod < 0.0 {
                return Err(Error::Domain(format!("P1 radicand {prod} < 0 at x = {x}")));
            }
            let p1 = prod.sqrt();
            let den = w.p2 * w.p2 - 96.0 * epsilon * p1 * p1;
            if den == 0.0 {
                return Err(Error::DivisionByZero);
            }
            let v = alpha * w.p2 * (w.p2 - 6.0 * w.p3) / den + beta * p1 / den;
            Ok(7.0 / 12.0 - v * v)
        },
    ))
}

/// Interval `I` of `φ` and its image `Δ = φ(I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditionDomain {
    pub interval: (f64, f64),
    pub image: (f64, f64),
}

impl AdditionDomain {
    pub fn of(phi: &SampledFunction) -> Self {
        AdditionDomain {
            interval: phi.interval(),
            image: phi.image(),
        }
    }

    /// `s = φ⁻¹(ξ) + φ⁻¹(η)` lies in `I`.
    pub fn contains_sum(&self, s: f64) -> bool {
        s >= self.interval.0 && s <= self.interval.1
    }

    /// Membership of `(ξ, η)` in the addition domain.
    pub fn contains(&self, phi: &SampledFunction, xi: f64, eta: f64) -> bool {
        match (phi.inverse(xi), phi.inverse(eta)) {
            (Ok(a), Ok(b)) => self.contains_sum(a + b),
            _ => false,
        }
    }
}

/// Default sample count for [`SampledFunction::from_fn`].
pub const DEFAULT_SAMPLES: usize = 4097;

/// Argument tolerance of [`SampledFunction::inverse`].
pub const INVERSE_TOL: f64 = 1e-13;

/// A strictly monotone function on `[a, b]`, either callable or given by
/// samples with monotone cubic (Fritsch–Carlson) interpolation.
#[derive(Clone)]
pub struct SampledFunction {
    ts: Vec<f64>,
    xs: Vec<f64>,
    slopes: Vec<f64>,
    callable: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    increasing: bool,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("interval", &self.interval())
            .field("samples", &self.ts.len())
            .field("callable", &self.callable.is_some())
            .finish()
    }
}

fn pchip_slopes(ts: &[f64], xs: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let h: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (xs[i + 1] - xs[i]) / h[i]).collect();
    if n == 2 {
        return vec![d[0], d[0]];
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let (w1, w2) = (2.0 * h[i] + h[i - 1], h[i] + 2.0 * h[i - 1]);
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

impl SampledFunction {
    /// Samples `phi` on `samples` uniform points of `[a, b]`; evaluation
    /// keeps using `phi`, the samples only bracket the inverse.
    pub fn from_fn(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        interval: (f64, f64),
        samples: usize,
    ) -> Result<Self> {
        let (a, b) = interval;
        if !(a < b) || samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "need a < b and at least 2 samples (got [{a}, {b}], {samples})"
            )));
        }
        let ts: Vec<f64> = (0..samples)
            .map(|i| {
                if i + 1 == samples {
                    b
                } else {
                    a + (b - a) * i as f64 / (samples - 1) as f64
                }
            })
            .collect();
        let xs: Vec<f64> = ts.iter().map(|&t| phi(t)).collect();
        let mut s = Self::from_samples(ts, xs)?;
        s.callable = Some(Arc::new(phi));
        Ok(s)
    }

    /// Monotone cubic interpolation through `(ts[i], xs[i])`.
    pub fn from_samples(ts: Vec<f64>, xs: Vec<f64>) -> Result<Self> {
        if ts.len() != xs.len() || ts.len() < 2 {
            return Err(Error::InvalidConfig("need at least 2 samples of equal length".into()));
        }
        if let Some(w) = ts.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(format!("sample abscissae not increasing at {}", w[0])));
        }
        let increasing = xs[1] > xs[0];
        for i in 0..xs.len() - 1 {
            let step = xs[i + 1] - xs[i];
            if !step.is_finite() || (increasing && step <= 0.0) || (!increasing && step >= 0.0) {
                return Err(Error::NotMonotone { t: ts[i] });
            }
        }
        let slopes = pchip_slopes(&ts, &xs);
        Ok(SampledFunction {
            ts,
            xs,
            slopes,
            callable: None,
            increasing,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.ts[0], self.ts[self.ts.len() - 1])
    }

    pub fn image(&self) -> (f64, f64) {
        let (p, q) = (self.xs[0], self.xs[self.xs.len() - 1]);
        (p.min(q), p.max(q))
    }

    /// `φ(t)` on `[a, b]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let (a, b) = self.interval();
        if !(t >= a && t <= b) {
            return Err(Error::Domain(format!("t = {t} outside [{a}, {b}]")));
        }
        if let Some(phi) = &self.callable {
            return Ok(phi(t));
        }
        let i = self.ts.partition_point(|&s| s <= t).clamp(1, self.ts.len() - 1) - 1;
        let h = self.ts[i + 1] - self.ts[i];
        let s = (t - self.ts[i]) / h;
        let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s).powi(2), s * (1.0 - s).powi(2));
        let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
        Ok(h00 * self.xs[i] + h10 * h * self.slopes[i] + h01 * self.xs[i + 1] + h11 * h * self.slopes[i + 1])
    }

    /// `φ⁻¹(x)` by bisection with secant steps, to `INVERSE_TOL` in `t`.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.image();
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain(format!("{x} outside the image [{lo}, {hi}]")));
        }
        let sign = if self.increasing { 1.0 } else { -1.0 };
        let k = self.xs.partition_point(|&v| sign * (v - x) <= 0.0);
        let i = k.clamp(1, self.xs.len() - 1) - 1;
        if self.xs[i] == x {
            return Ok(self.ts[i]);
        }
        if self.xs[i + 1] == x {
            return Ok(self.ts[i + 1]);
        }
        let g = |t: f64| self.eval(t).map(|v| sign * (v - x));
        let (mut a, mut b) = (self.ts[i], self.ts[i + 1]);
        let (mut ga, mut gb) = (g(a)?, g(b)?);
        if ga > 0.0 || gb < 0.0 {
            // callable and samples disagree on the bracket; widen to the whole interval
            let (ia, ib) = self.interval();
            a = ia;
            b = ib;
            ga = g(a)?;
            gb = g(b)?;
            if ga > 0.0 || gb < 0.0 {
                return Err(Error::RootNotBracketed(format!("φ⁻¹({x})")));
            }
        }
        for iter in 0..200 {
            if b - a <= INVERSE_TOL {
                break;
            }
            // alternate secant and bisection so the bracket always halves every two steps
            let secant = a - ga * (b - a) / (gb - ga);
            let mid = if iter % 2 == 0 && secant > a && secant < b {
                secant
            } else {
                0.5 * (a + b)
            };
            let gm = g(mid)?;
            if gm == 0.0 {
                return Ok(mid);
            }
            if gm < 0.0 {
                a = mid;
                ga = gm;
            } else {
                b = mid;
                gb = gm;
            }
        }
        Ok(if ga.abs() <= gb.abs() { a } else { b })
    }
}

/// `R(x, y) = φ(φ⁻¹(x) + φ⁻¹(y))` on the addition domain of `φ`.
pub fn construct_numeric(phi: SampledFunction, domain: AdditionDomain) -> Result<AdditionFormula> {
    if !domain.contains_sum(0.0) {
        return Err(Error::InvalidConfig("the interval must contain t = 0".into()));
    }
    let x0 = phi.eval(0.0)?;
    let phi = Arc::new(phi);
    Ok(AdditionFormula::bivariate(
        "numeric construction",
        x0,
        format!(
            "φ⁻¹(x) + φ⁻¹(y) in [{}, {}]",
            domain.interval.0, domain.interval.1
        ),
        move |x, y| {
            let outside = || Error::OutsideAdditionDomain { x, y };
            let a = phi.inverse(x).map_err(|_| outside())?;
            let b = phi.inverse(y).map_err(|_| outside())?;
            if !domain.contains_sum(a + b) {
                return Err(outside());
            }
            phi.eval(a + b)
        },
    ))
}
