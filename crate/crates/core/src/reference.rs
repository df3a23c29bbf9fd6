//! Ground truth: closed-form solutions, Jacobi elliptic functions, and two
//! classical integrators (fixed-step RK4, adaptive Dormand–Prince 5(4)).

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ivp::IvpProblem;

type Eval = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    ClosedForm,
    Integrated,
}

/// `t -> x(t)` on a known domain, with a stated accuracy.
#[derive(Clone)]
pub struct ReferenceSolution {
    eval: Eval,
    /// Closed interval on which `eval` is meaningful.
    pub domain: (f64, f64),
    pub kind: ReferenceKind,
    /// For integrated solutions, the accumulated embedded error estimate.
    pub accuracy: f64,
}

impl fmt::Debug for ReferenceSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceSolution")
            .field("domain", &self.domain)
            .field("kind", &self.kind)
            .field("accuracy", &self.accuracy)
            .finish()
    }
}

impl ReferenceSolution {
    pub fn new(
        eval: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
        domain: (f64, f64),
        kind: ReferenceKind,
        accuracy: f64,
    ) -> Self {
        ReferenceSolution {
            eval: Arc::new(eval),
            domain,
            kind,
            accuracy,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        (self.eval)(t)
    }
}

/// `x(t) = x0 / (1 - x0 t)`, the solution of `x' = x^2`.
pub fn closed_form_example1(x0: f64) -> Result<ReferenceSolution> {
    if x0 == 0.0 || !x0.is_finite() {
        return Err(Error::InvalidConfig(format!("x0 = {x0} must be finite and nonzero")));
    }
    let pole = 1.0 / x0;
    let domain = if x0 > 0.0 {
        (f64::NEG_INFINITY, pole)
    } else {
        (pole, f64::INFINITY)
    };
    Ok(ReferenceSolution::new(
        move |t| {
            let d = 1.0 - x0 * t;
            if d == 0.0 {
                return Err(Error::Pole(format!("x(t) has its asymptote at t = {t}")));
            }
            Ok(x0 / d)
        },
        domain,
        ReferenceKind::ClosedForm,
        f64::EPSILON,
    ))
}

fn agm_ladder(m: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut a, mut b, mut c) = (1.0f64, (1.0 - m).sqrt(), m.sqrt());
    let mut avals = vec![a];
    let mut cvals = vec![c];
    while c.abs() > f64::EPSILON * a && avals.len() < 32 {
        let an = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        avals.push(a);
        cvals.push(c);
    }
    (avals, cvals)
}

/// Complete elliptic integral of the first kind, parameter `m`.
pub fn ellip_k(m: f64) -> f64 {
    if m >= 1.0 {
        return f64::INFINITY;
    }
    let (a, _) = agm_ladder(m);
    FRAC_PI_2 / a[a.len() - 1]
}

/// `(sn, cn, dn)(u | m)` by the descending Landen / AGM scheme, `0 <= m <= 1`.
pub fn jacobi_sn_cn_dn(u: f64, m: f64) -> (f64, f64, f64) {
    if m == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }
    if m == 1.0 {
        let s = 1.0 / u.cosh();
        return (u.tanh(), s, s);
    }
    let (a, c) = agm_ladder(m);
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for k in (1..=n).rev() {
        phi = 0.5 * (phi + (c[k] / a[k] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn^2 = (1 - m) + m cn^2: two non-negative terms, no cancellation
    let dn = ((1.0 - m) + m * cn * cn).sqrt();
    (sn, cn, dn)
}

pub fn jacobi_dn(u: f64, m: f64) -> f64 {
    jacobi_sn_cn_dn(u, m).2
}

/// Parameter of the elliptic solution of `x' = sqrt(4x^3 - 13x/12 - 35/216)`.
pub const EXAMPLE2_M: f64 = 0.25;

/// Shift `δ` with `m sn(δ|m)^2 = ε` on `(0, K]`, equivalently `dn(δ)^2 = 1 - ε`.
pub fn example2_delta(epsilon: f64) -> Result<f64> {
    let m = EXAMPLE2_M;
    if !(epsilon > 0.0 && epsilon <= m) {
        return Err(Error::RootNotBracketed(format!(
            "1 - dn(δ|1/4)^2 = {epsilon} is outside (0, 1/4]"
        )));
    }
    let g = |d: f64| {
        let s = jacobi_sn_cn_dn(d, m).0;
        m * s * s - epsilon
    };
    let (mut lo, mut hi) = (0.0f64, ellip_k(m));
    if g(hi) < 0.0 {
        return Err(Error::RootNotBracketed(format!("no root for ε = {epsilon}")));
    }
    // g is increasing on [0, K]; bisect to adjacent floats
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(hi).abs() < g(lo).abs() { hi } else { lo })
}

/// `x(t) = 7/12 - dn(t + δ | 1/4)^2` with `x(0) = -5/12 + ε`.
///
/// Evaluated as `-5/12 + m sn(t + δ)^2`, which is the same function without
/// the cancellation in `1 - dn^2` near `t = 0`. The domain is the increasing
/// branch `[0, K(1/4) - δ]`, where `x' = +sqrt(...)` holds.
pub fn closed_form_example2(epsilon: f64) -> Result<ReferenceSolution> {
    let delta = example2_delta(epsilon)?;
    let m = EXAMPLE2_M;
    Ok(ReferenceSolution::new(
        move |t| {
            let s = jacobi_sn_cn_dn(t + delta, m).0;
            Ok(-5.0 / 12.0 + m * s * s)
        },
        (0.0, ellip_k(m) - delta),
        ReferenceKind::ClosedForm,
        1e-14,
    ))
}

/// A scalar right-hand side.
pub type Rhs<'a> = &'a (dyn Fn(f64) -> Result<f64> + Sync);

fn rhs_at(f: Rhs, t: f64, x: f64) -> Result<f64> {
    let v = f(x).map_err(|e| Error::StepDomain {
        t,
        source: Box::new(e),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::StepDomain {
            t,
            source: Box::new(Error::NonFinite(format!("f({x}) = {v}"))),
        })
    }
}

fn interval(t_end: f64) -> (f64, f64) {
    (t_end.min(0.0), t_end.max(0.0))
}

fn out_of_range(t: f64, domain: (f64, f64)) -> Error {
    Error::Domain(format!(
        "t = {t} outside the integrated range [{}, {}]",
        domain.0, domain.1
    ))
}

/// Index `i` with `ts[i] <= t <= ts[i+1]` for a monotone grid in either direction.
fn locate(ts: &[f64], t: f64) -> usize {
    let dir = ts[ts.len() - 1] >= ts[0];
    let k = ts.partition_point(|&s| if dir { s <= t } else { s >= t });
    k.clamp(1, ts.len() - 1) - 1
}

pub fn rk4_solve(problem: &IvpProblem, t_end: f64, h: f64) -> Result<ReferenceSolution> {
    let f = |x: f64| problem.rhs(x);
    rk4_solve_fn(&f, problem.x0, t_end, h)
}

/// Classical RK4 with `ceil(|t_end| / h)` equal steps and cubic Hermite
/// dense output between them.
pub fn rk4_solve_fn(f: Rhs, x0: f64, t_end: f64, h: f64) -> Result<ReferenceSolution> {
    if !(h > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidConfig(format!("rk4 needs h > 0 and finite t_end, got h = {h}")));
    }
    let steps = ((t_end.abs() / h).ceil() as usize).max(1);
    let dt = t_end / steps as f64;
    let mut ts = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut fs = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut fx = rhs_at(f, 0.0, x)?;
    ts.push(0.0);
    xs.push(x);
    fs.push(fx);
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = fx;
        let k2 = rhs_at(f, t, x + 0.5 * dt * k1)?;
        let k3 = rhs_at(f, t, x + 0.5 * dt * k2)?;
        let k4 = rhs_at(f, t, x + dt * k3)?;
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let tn = if i + 1 == steps { t_end } else { (i + 1) as f64 * dt };
        fx = rhs_at(f, tn, x)?;
        ts.push(tn);
        xs.push(x);
        fs.push(fx);
    }
    let domain = interval(t_end);
    Ok(ReferenceSolution::new(
        move |t| {
            if t < domain.0 || t > domain.1 {
                return Err(out_of_range(t, domain));
            }
            let i = locate(&ts, t);
            let hstep = ts[i + 1] - ts[i];
            if hstep == 0.0 {
                return Ok(xs[i]);
            }
            let s = (t - ts[i]) / hstep;
            let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s).powi(2), s * (1.0 - s).powi(2));
            let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
            Ok(h00 * xs[i] + h10 * hstep * fs[i] + h01 * xs[i + 1] + h11 * hstep * fs[i + 1])
        },
        domain,
        ReferenceKind::Integrated,
        f64::NAN,
    ))
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// continuous extension
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Copy)]
struct DenseStep {
    t: f64,
    h: f64,
    r: [f64; 5],
}

impl DenseStep {
    fn eval(&self, t: f64) -> f64 {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let r = &self.r;
        r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])))
    }
}

pub fn dp45_solve(problem: &IvpProblem, t_end: f64, rtol: f64, atol: f64) -> Result<ReferenceSolution> {
    let f = |x: f64| problem.rhs(x);
    dp45_solve_fn(&f, problem.x0, t_end, rtol, atol)
}

/// Adaptive Dormand–Prince 5(4) with PI step control and the standard
/// fourth-order continuous extension. Integrates backwards when `t_end < 0`.
pub fn dp45_solve_fn(
    f: Rhs,
    x0: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<ReferenceSolution> {
    if !(rtol > 0.0 && atol > 0.0) || !t_end.is_finite() || !x0.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "dp45 needs rtol, atol > 0 and finite t_end, x0 (rtol = {rtol}, atol = {atol})"
        )));
    }
    let domain = interval(t_end);
    if t_end == 0.0 {
        return Ok(ReferenceSolution::new(
            move |t| if t == 0.0 { Ok(x0) } else { Err(out_of_range(t, domain)) },
            domain,
            ReferenceKind::Integrated,
            0.0,
        ));
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let (safe, beta, expo) = (0.9, 0.04, 0.2 - 0.04 * 0.75);
    let (fac_min, fac_max) = (0.2, 10.0);

    let mut t = 0.0f64;
    let mut x = x0;
    let mut k1 = rhs_at(f, t, x)?;
    let sc = atol + rtol * x.abs();
    let mut h = {
        let (d0, d1) = (x.abs() / sc, k1.abs() / sc);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(span).min(0.1 * span.max(1e-3))
    };
    let mut facold = 1e-4f64;
    let mut steps = Vec::new();
    let mut achieved = 0.0f64;
    let mut rejected_last = false;

    for _ in 0..MAX_STEPS {
        if (t - t_end).abs() <= 1e-15 * span {
            break;
        }
        let remaining = (t_end - t).abs();
        if h >= remaining {
            h = remaining;
        }
        if h < 1e-14 * t.abs().max(span) {
            return Err(Error::MinStepReached { t });
        }
        let hs = dir * h;
        let mut k = [0.0f64; 7];
        k[0] = k1;
        let mut stage_failed = false;
        for s in 1..7 {
            let xs = x + hs * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
            match f(xs) {
                Ok(v) if v.is_finite() && xs.is_finite() => k[s] = v,
                Ok(_) => {
                    stage_failed = true;
                    break;
                }
                Err(e) => {
                    // a failure at a trial stage only shrinks the step; persistent
                    // failure ends in MinStepReached unless it is at the start
                    if h <= 1e-10 * span {
                        return Err(Error::StepDomain {
                            t: t + hs * C[s],
                            source: Box::new(e),
                        });
                    }
                    stage_failed = true;
                    break;
                }
            }
        }
        if stage_failed {
            h *= 0.25;
            rejected_last = true;
            continue;
        }
        let x_new = x + hs * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>();
        let err_abs = hs * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let scale = atol + rtol * x.abs().max(x_new.abs());
        let err = (err_abs / scale).abs();
        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let ydiff = x_new - x;
            let bspl = hs * k[0] - ydiff;
            steps.push(DenseStep {
                t,
                h: hs,
                r: [
                    x,
                    ydiff,
                    bspl,
                    ydiff - hs * k[6] - bspl,
                    hs * (0..7).map(|j| D[j] * k[j]).sum::<f64>(),
                ],
            });
            achieved += err_abs.abs();
            t = if (t + hs - t_end).abs() <= 1e-15 * span || h == remaining {
                t_end
            } else {
                t + hs
            };
            x = x_new;
            k1 = k[6];
            let fac = (fac11 / facold.powf(beta) / safe).clamp(1.0 / fac_max, 1.0 / fac_min);
            facold = err.max(1e-4);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
            h = h_new;
        } else {
            h /= (fac11 / safe).min(1.0 / fac_min);
            rejected_last = true;
        }
    }
    if t != t_end {
        return Err(Error::MinStepReached { t });
    }
    Ok(ReferenceSolution::new(
        move |tq| {
            if tq < domain.0 || tq > domain.1 {
                return Err(out_of_range(tq, domain));
            }
            let k = steps.partition_point(|s| dir * (s.t - tq) <= 0.0);
            let i = k.clamp(1, steps.len()) - 1;
            Ok(steps[i].eval(tq))
        },
        domain,
        ReferenceKind::Integrated,
        achieved,
    ))
}
