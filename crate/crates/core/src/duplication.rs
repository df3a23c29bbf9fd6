//! The duplication algorithm: `x(t) ≈ Rⁿ(x_{m1}(t / 2ⁿ))`, sampled on a
//! partition of `[a, b]` and joined linearly.

use std::fmt;
use std::sync::Arc;

use crate::double_angle::{iterate_r, taylor_general, DoubleAngleMap, DoubleAngleSeries, DEFAULT_M2};
use crate::error::{Error, Result};
use crate::ivp::{solve_taylor, IvpProblem, SolutionSeries, DEFAULT_M1};

/// Default radius of the seed neighborhood `V0 = [-r0, r0]`.
pub const DEFAULT_R0: f64 = 0.1;

/// Max-errors below this are treated as rounding noise by the order fit.
pub const ERROR_FLOOR: f64 = 1e-13;

/// Where `R` comes from.
#[derive(Clone)]
pub enum RSource {
    /// A caller-supplied exact double-angle formula.
    Exact(Arc<dyn DoubleAngleMap>),
    /// The Taylor polynomial of order `m2` about `x0`.
    Taylor,
    /// The exact formula when one is given, otherwise Taylor.
    Auto(Option<Arc<dyn DoubleAngleMap>>),
}

impl RSource {
    pub fn label(&self) -> &'static str {
        match self.resolved() {
            Some(_) => "exact",
            None => "taylor",
        }
    }

    fn resolved(&self) -> Option<&Arc<dyn DoubleAngleMap>> {
        match self {
            RSource::Exact(r) | RSource::Auto(Some(r)) => Some(r),
            RSource::Taylor | RSource::Auto(None) => None,
        }
    }
}

impl fmt::Debug for RSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RSource::Exact(_) => f.write_str("Exact"),
            RSource::Taylor => f.write_str("Taylor"),
            RSource::Auto(r) => write!(f, "Auto({})", if r.is_some() { "exact" } else { "taylor" }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    /// `2ⁿ + 1` uniform nodes, every node duplicated `n` times.
    Coupled,
    /// `points` uniform nodes, each with the smallest `n` that puts
    /// `t / 2ⁿ` in `V0`.
    Decoupled { points: usize },
}

#[derive(Debug, Clone)]
pub struct DuplicationConfig {
    pub n: u32,
    pub m1: usize,
    pub m2: usize,
    pub r0: f64,
    pub interval: (f64, f64),
    pub r_source: RSource,
    pub partition: Partition,
}

impl DuplicationConfig {
    /// Coupled partition of `[a, b]`, rejecting `n` too small for `V0`.
    pub fn coupled(n: u32, interval: (f64, f64), r_source: RSource) -> Result<Self> {
        DuplicationConfig {
            n,
            m1: DEFAULT_M1,
            m2: DEFAULT_M2,
            r0: DEFAULT_R0,
            interval,
            r_source,
            partition: Partition::Coupled,
        }
        .validated()
    }

    /// Decoupled partition with `points` nodes.
    pub fn decoupled(points: usize, interval: (f64, f64), r_source: RSource) -> Result<Self> {
        DuplicationConfig {
            n: 0,
            m1: DEFAULT_M1,
            m2: DEFAULT_M2,
            r0: DEFAULT_R0,
            interval,
            r_source,
            partition: Partition::Decoupled { points },
        }
        .validated()
    }

    pub fn with_orders(mut self, m1: usize, m2: usize) -> Result<Self> {
        self.m1 = m1;
        self.m2 = m2;
        self.validated()
    }

    pub fn with_r0(mut self, r0: f64) -> Result<Self> {
        self.r0 = r0;
        self.validated()
    }

    /// Checks every invariant; all constructors and builders go through here.
    pub fn validated(self) -> Result<Self> {
        let (a, b) = self.interval;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::InvalidConfig(format!("interval [{a}, {b}] is not a finite a <= b")));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidConfig(format!("r0 = {} must be positive", self.r0)));
        }
        if self.m1 == 0 || self.m2 == 0 {
            return Err(Error::InvalidConfig("m1 and m2 must be at least 1".into()));
        }
        match self.partition {
            Partition::Coupled => {
                if self.n > 40 {
                    return Err(Error::InvalidConfig(format!("n = {} exceeds 40", self.n)));
                }
                let seed = a.abs().max(b.abs()) / 2f64.powi(self.n as i32);
                if seed > self.r0 {
                    return Err(Error::SeedOutsideV0 { seed, r0: self.r0 });
                }
            }
            Partition::Decoupled { points } => {
                if points == 0 {
                    return Err(Error::EmptyGrid);
                }
            }
        }
        Ok(self)
    }

    /// `min(m1 + 1, m2 + 1)`, or `m1 + 1` with an exact `R`.
    pub fn effective_order(&self) -> usize {
        match self.r_source.resolved() {
            Some(_) => self.m1 + 1,
            None => (self.m1 + 1).min(self.m2 + 1),
        }
    }

    /// Partition nodes `t_i` and the duplication count used at each.
    pub fn nodes(&self) -> Vec<(f64, u32)> {
        let (a, b) = self.interval;
        let count = match self.partition {
            Partition::Coupled => (1usize << self.n) + 1,
            Partition::Decoupled { points } => points,
        };
        (0..count)
            .map(|i| {
                let t = if count == 1 {
                    a
                } else if i + 1 == count {
                    b
                } else {
                    a + (b - a) * (i as f64 / (count - 1) as f64)
                };
                let n = match self.partition {
                    Partition::Coupled => self.n,
                    Partition::Decoupled { .. } => minimal_n(t, self.r0),
                };
                (t, n)
            })
            .collect()
    }
}

/// Smallest `n >= 0` with `|t| / 2ⁿ <= r0`.
pub fn minimal_n(t: f64, r0: f64) -> u32 {
    let mut n = 0;
    while t.abs() / 2f64.powi(n as i32) > r0 {
        n += 1;
    }
    n
}

/// Seed polynomial and double-angle map, built once and reused per node.
pub struct Duplicator {
    seed: SolutionSeries,
    r: Option<Arc<dyn DoubleAngleMap>>,
    series: Option<DoubleAngleSeries>,
    r0: f64,
}

impl Duplicator {
    pub fn new(problem: &IvpProblem, config: &DuplicationConfig) -> Result<Self> {
        let seed = solve_taylor(problem, config.m1)?;
        let r = config.r_source.resolved().cloned();
        let series = if seed.degenerate || r.is_some() {
            None
        } else {
            Some(taylor_general(&problem.f, problem.x0, config.m2)?)
        };
        Ok(Duplicator {
            seed,
            r,
            series,
            r0: config.r0,
        })
    }

    pub fn seed(&self) -> &SolutionSeries {
        &self.seed
    }

    /// The Taylor `R`, when that is what this duplicator iterates.
    pub fn series(&self) -> Option<&DoubleAngleSeries> {
        self.series.as_ref()
    }

    fn map(&self) -> &dyn DoubleAngleMap {
        match (&self.r, &self.series) {
            (Some(r), _) => r.as_ref(),
            (None, Some(s)) => s,
            (None, None) => unreachable!("degenerate seeds never iterate"),
        }
    }

    /// `Rⁿ(x_{m1}(t / 2ⁿ))`.
    pub fn at(&self, t_hat: f64, n: u32) -> Result<f64> {
        self.at_traced(t_hat, n).map(|(v, _)| v)
    }

    /// Value plus the largest `|u - x0|` over the arguments `u` fed to `R`.
    pub fn at_traced(&self, t_hat: f64, n: u32) -> Result<(f64, f64)> {
        let s = t_hat / 2f64.powi(n as i32);
        if s.abs() > self.r0 {
            return Err(Error::SeedOutsideV0 {
                seed: s.abs(),
                r0: self.r0,
            });
        }
        if self.seed.degenerate {
            return Ok((self.seed.x0, 0.0));
        }
        let x0 = self.seed.x0;
        let map = self.map();
        let mut v = self.seed.eval(s);
        let mut excursion = 0.0f64;
        for i in 1..=n {
            excursion = excursion.max((v - x0).abs());
            v = iterate_r(map, v, 1).map_err(|e| match e {
                Error::Iteration { source, .. } => Error::Iteration { index: i, source },
                other => other,
            })?;
        }
        Ok((v, excursion))
    }
}

/// `Rⁿ(x_{m1}(t_hat / 2ⁿ))` with `n` taken from `config`.
pub fn approx_at(problem: &IvpProblem, t_hat: f64, config: &DuplicationConfig) -> Result<f64> {
    Duplicator::new(problem, config)?.at(t_hat, config.n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon when the `parallel` feature is on, otherwise sequential.
    #[default]
    Parallel,
}

/// Piecewise-linear interpolant through `(t_i, value_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalApprox {
    pub nodes: Vec<(f64, f64)>,
    /// Largest distance from `x0` at which `R` was evaluated.
    pub max_excursion: f64,
}

impl PolygonalApprox {
    /// Two-point Lagrange form on the segment containing `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.nodes[0].0, self.nodes[self.nodes.len() - 1].0);
        if !(t >= a && t <= b) {
            return Err(Error::Domain(format!("t = {t} outside [{a}, {b}]")));
        }
        if self.nodes.len() == 1 {
            return Ok(self.nodes[0].1);
        }
        let k = self.nodes.partition_point(|&(s, _)| s <= t);
        let i = k.clamp(1, self.nodes.len() - 1) - 1;
        let ((ti, vi), (tj, vj)) = (self.nodes[i], self.nodes[i + 1]);
        Ok(vi * ((t - tj) / (ti - tj)) + vj * ((t - ti) / (tj - ti)))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn map_nodes<T, F>(items: &[T], exec: Execution, f: F) -> Vec<Result<(f64, f64)>>
where
    T: Sync,
    F: Fn(&T) -> Result<(f64, f64)> + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => items.iter().map(f).collect(),
    }
}

/// `P_n^{m1,m2}` on the configured partition.
pub fn polygonal(problem: &IvpProblem, config: &DuplicationConfig) -> Result<PolygonalApprox> {
    polygonal_with(problem, config, Execution::default())
}

/// As [`polygonal`], with explicit execution mode. Both modes return
/// identical results; the first failing node in `t` order is reported.
pub fn polygonal_with(
    problem: &IvpProblem,
    config: &DuplicationConfig,
    exec: Execution,
) -> Result<PolygonalApprox> {
    let dup = Duplicator::new(problem, config)?;
    let nodes = config.nodes();
    let results = map_nodes(&nodes, exec, |&(t, n)| dup.at_traced(t, n));
    let mut out = Vec::with_capacity(nodes.len());
    let mut max_excursion = 0.0f64;
    for ((t, _), r) in nodes.iter().zip(results) {
        let (v, e) = r.map_err(|e| Error::Node {
            t: *t,
            source: Box::new(e),
        })?;
        max_excursion = max_excursion.max(e);
        out.push((*t, v));
    }
    Ok(PolygonalApprox {
        nodes: out,
        max_excursion,
    })
}

/// Least-squares slope of `log err` against `log h`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 points above the floor to fit, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFit {
    pub slope: f64,
    /// `(r / 2ⁿ, max error)` for every `n`, including points under the floor.
    pub samples: Vec<(f64, f64)>,
}

/// Max error over nodes and segment midpoints of `P_n` against `reference`.
pub fn max_error(
    approx: &PolygonalApprox,
    reference: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<f64> {
    let mut probes: Vec<f64> = approx.nodes.iter().map(|&(t, _)| t).collect();
    probes.extend(approx.nodes.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)));
    probes.iter().try_fold(0.0f64, |m, &t| {
        Ok(m.max((approx.eval(t)? - reference(t)?).abs()))
    })
}

/// Fitted order of `max |P_n - x|` in the mesh size `r / 2ⁿ`, over coupled
/// partitions for each `n` in `ns`. Errors under [`ERROR_FLOOR`] are dropped.
pub fn convergence_order(
    problem: &IvpProblem,
    reference: &(dyn Fn(f64) -> Result<f64> + Sync),
    base: &DuplicationConfig,
    ns: &[u32],
) -> Result<ConvergenceFit> {
    if ns.len() < 3 {
        return Err(Error::InvalidConfig("need at least 3 values of n".into()));
    }
    let r = base.interval.1 - base.interval.0;
    let mut samples = Vec::with_capacity(ns.len());
    for &n in ns {
        let cfg = DuplicationConfig {
            n,
            partition: Partition::Coupled,
            ..base.clone()
        }
        .validated()?;
        let p = polygonal(problem, &cfg)?;
        samples.push((r / 2f64.powi(n as i32), max_error(&p, reference)?));
    }
    let kept: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, e)| e >= ERROR_FLOOR).collect();
    Ok(ConvergenceFit {
        slope: fit_slope(&kept)?,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::example1_double;
    use crate::expr::ExprAst;

    fn ex1() -> IvpProblem {
        IvpProblem::from_source("x^2", 1.0, "example 1").unwrap()
    }

    fn exact1() -> RSource {
        RSource::Exact(Arc::new(example1_double(1.0).unwrap()))
    }

    fn closed1(t: f64) -> Result<f64> {
        Ok(1.0 / (1.0 - t))
    }

    #[test]
    fn single_points() {
        let p = ex1();
        // one duplication needs V0 to reach 1/3; the seed truncation
        // 1.5 (1/3)^21 is then amplified by R'(1.5) = 8
        let cfg = DuplicationConfig {
            n: 1,
            m1: 20,
            m2: 20,
            r0: 0.5,
            interval: (0.0, 2.0 / 3.0),
            r_source: exact1(),
            partition: Partition::Coupled,
        }
        .validated()
        .unwrap();
        let err = (approx_at(&p, 2.0 / 3.0, &cfg).unwrap() - 3.0).abs();
        assert!(err <= 8.0 * 1.5 * 3f64.powi(-21) * 1.01 && err > 1e-10, "{err}");
        assert_eq!(approx_at(&p, 0.0, &cfg).unwrap(), 1.0);
        let cfg = DuplicationConfig::coupled(3, (0.0, 2.0 / 3.0), exact1()).unwrap();
        assert!((approx_at(&p, 2.0 / 3.0, &cfg).unwrap() - 3.0).abs() <= 1e-12);
        let cfg = DuplicationConfig::coupled(8, (0.0, 0.5), exact1()).unwrap();
        assert!((approx_at(&p, 0.5, &cfg).unwrap() - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn seed_outside_v0_is_rejected() {
        assert!(matches!(
            DuplicationConfig::coupled(2, (-0.5, 0.5), exact1()),
            Err(Error::SeedOutsideV0 { .. })
        ));
        let cfg = DuplicationConfig::coupled(3, (0.0, 0.8), exact1()).unwrap();
        let d = Duplicator::new(&ex1(), &cfg).unwrap();
        assert!(matches!(d.at(0.9, 3), Err(Error::SeedOutsideV0 { .. })));
    }

    #[test]
    fn degenerate_problem_is_constant() {
        let p = IvpProblem::from_source("x^2", 0.0, "zero").unwrap();
        let cfg = DuplicationConfig::decoupled(11, (-1.0, 1.0), RSource::Taylor).unwrap();
        let poly = polygonal(&p, &cfg).unwrap();
        assert!(poly.nodes.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn iteration_errors_carry_index() {
        // beyond the pole at t = 1: R hits x = 2 exactly on the way
        let p = ex1();
        let cfg = DuplicationConfig::coupled(2, (0.0, 0.4), exact1()).unwrap();
        let d = Duplicator::new(&p, &cfg).unwrap();
        let pole = RSource::Exact(Arc::new(ExprAst::parse("1/(x-2)").unwrap()));
        let cfg2 = DuplicationConfig { r_source: pole, ..cfg.clone() };
        let d2 = Duplicator::new(&IvpProblem::from_source("1", 2.5, "c").unwrap(), &cfg2).unwrap();
        match d2.at(0.0, 2) {
            Err(Error::Iteration { index: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(d.at(0.4, 2).is_ok());
    }

    #[test]
    fn coupled_partition_shape() {
        let cfg = DuplicationConfig::coupled(5, (-0.5, 0.5), exact1()).unwrap();
        let nodes = cfg.nodes();
        assert_eq!(nodes.len(), 33);
        let h = 1.0 / 32.0;
        for w in nodes.windows(2) {
            assert!((w[1].0 - w[0].0 - h).abs() <= f64::EPSILON);
        }
        assert_eq!(minimal_n(0.0, 0.1), 0);
        assert_eq!(minimal_n(0.1, 0.1), 0);
        assert_eq!(minimal_n(0.5, 0.1), 3);
    }

    #[test]
    fn interpolation() {
        let p = ex1();
        let cfg = DuplicationConfig::decoupled(240, (-0.5, 0.5), exact1()).unwrap();
        let poly = polygonal(&p, &cfg).unwrap();
        assert_eq!(poly.len(), 240);
        let mut worst = 0.0f64;
        for &(t, v) in &poly.nodes {
            assert_eq!(poly.eval(t).unwrap(), v);
            worst = worst.max((v - 1.0 / (1.0 - t)).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
        let ((t0, v0), (t1, v1)) = (poly.nodes[10], poly.nodes[11]);
        let mid = poly.eval(0.5 * (t0 + t1)).unwrap();
        assert!((mid - 0.5 * (v0 + v1)).abs() <= 4.0 * f64::EPSILON * mid.abs());
        assert!(poly.eval(0.6).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let p = ex1();
        for src in [exact1(), RSource::Taylor] {
            let cfg = DuplicationConfig::decoupled(1000, (-0.5, 0.9), src).unwrap();
            let a = polygonal_with(&p, &cfg, Execution::Sequential).unwrap();
            let b = polygonal_with(&p, &cfg, Execution::Parallel).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, polygonal(&p, &cfg).unwrap());
        }
    }

    #[test]
    fn first_failing_node_is_reported() {
        let p = ex1();
        let capped = |x: f64| {
            if x > 1.5 {
                Err(Error::Domain(format!("{x} > 1.5")))
            } else {
                Ok(x / (2.0 - x))
            }
        };
        let cfg = DuplicationConfig::decoupled(41, (0.0, 2.0), RSource::Exact(Arc::new(capped))).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            match polygonal_with(&p, &cfg, exec) {
                // x(t/2) first exceeds 1.5 at the node t = 0.7
                Err(Error::Node { t, .. }) => assert!((t - 0.7).abs() < 1e-12, "{t}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn convergence_order_examples() {
        let fit = convergence_order(&ex1(), &closed1, &DuplicationConfig::coupled(9, (-0.5, 0.5), exact1()).unwrap(), &[4, 5, 6, 7, 8, 9]).unwrap();
        assert!((1.7..=2.3).contains(&fit.slope), "{fit:?}");
        let p = IvpProblem::from_source("x", 1.0, "exp").unwrap();
        let sq = RSource::Exact(Arc::new(ExprAst::parse("x^2").unwrap()));
        let base = DuplicationConfig::coupled(9, (-0.5, 0.5), sq).unwrap();
        let fit = convergence_order(&p, &|t: f64| Ok(t.exp()), &base, &[4, 5, 6, 7, 8, 9]).unwrap();
        assert!((1.7..=2.3).contains(&fit.slope), "{fit:?}");
        assert!(convergence_order(&p, &|t: f64| Ok(t.exp()), &base, &[4, 5]).is_err());
    }

    #[test]
    fn error_decomposes_into_node_and_interpolation_parts() {
        // P_n through exact values isolates the interpolation error
        let p = ex1();
        let cfg = DuplicationConfig::coupled(6, (-0.5, 0.5), exact1()).unwrap();
        let approx = polygonal(&p, &cfg).unwrap();
        let interp = PolygonalApprox {
            nodes: approx.nodes.iter().map(|&(t, _)| (t, closed1(t).unwrap())).collect(),
            max_excursion: 0.0,
        };
        let total = max_error(&approx, &closed1).unwrap();
        let interp_only = max_error(&interp, &closed1).unwrap();
        let node_only = approx
            .nodes
            .iter()
            .zip(&interp.nodes)
            .map(|(a, b)| (a.1 - b.1).abs())
            .fold(0.0, f64::max);
        assert!(total <= interp_only + node_only + 1e-15);
        assert!(node_only < 1e-12 && interp_only > 1e-5);
    }

    #[test]
    fn effective_order() {
        let cfg = DuplicationConfig::coupled(4, (0.0, 1.0), RSource::Taylor)
            .unwrap()
            .with_orders(20, 3)
            .unwrap();
        assert_eq!(cfg.effective_order(), 4);
        let cfg = DuplicationConfig { r_source: exact1(), ..cfg };
        assert_eq!(cfg.effective_order(), 21);
        assert_eq!(RSource::Auto(None).label(), "taylor");
    }
}
