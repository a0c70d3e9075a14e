//! Concrete problem instances
//!
//! ```text
//! u_t = u_xx + lambda g(t, x, u)          on (0, 1) x (0, L)
//! u(0, .) = lambda B(u)                   functional initial condition
//! u(t, 0) = u(t, L) = 0
//! ```
//!
//! together with the lower-bound data `(delta_rho, eta_rho, t0)` and a
//! sampling checker for the positivity and lower-bound hypotheses on the
//! sphere `|y|_C = rho` of the positive cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expression, Var};
use crate::lattice::{
    clamp_to_cone, clamp_trajectory, is_in_cone, norm_c, norm_sup, rescale_to_norm, trajectory_cone_status,
    ConeStatus, ConeTolerance, GridFunction, Trajectory,
};
use crate::mild::{self, duhamel, InitialOperator, MildConfig, SourceTerm};
use crate::semigroup::{AxiomCheck, SemigroupHandle};

/// Relative slack on the ball radius when checking `|v| <= rho`.
const DOMAIN_SLACK: f64 = 1e-12;

/// Lattice resolution per axis for the sign check of `g`.
const SIGN_CHECK_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub n: usize,
    pub m: usize,
}

impl Grid {
    pub fn new(length: f64, n: usize, m: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("domain length must be positive, got {length}")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("need at least one interior point".into()));
        }
        if m < 2 {
            return Err(Error::InvalidGrid(format!("need at least two time steps, got m = {m}")));
        }
        Ok(Grid { length, n, m })
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n as f64 + 1.0)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h()
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    /// Index of the interior node at `x`, if `x` is one.
    pub fn space_node(&self, x: f64) -> Option<usize> {
        let k = (x / self.h()).round();
        if k < 1.0 || k > self.n as f64 {
            return None;
        }
        let i = k as usize - 1;
        ((self.x(i) - x).abs() <= 1e-9 * self.length).then_some(i)
    }

    /// Nearest time node to `t` and its distance.
    pub fn snap_time(&self, t: f64) -> Result<(usize, f64)> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Validation(format!("time {t} is outside [0, 1]")));
        }
        let j = (t * self.m as f64).round() as usize;
        Ok((j, (self.t(j) - t).abs()))
    }

    pub fn profile(&self, f: impl FnMut(f64) -> f64) -> Result<GridFunction> {
        GridFunction::from_fn(self.length, self.n, f)
    }

    pub fn zero_trajectory(&self) -> Trajectory {
        Trajectory::zeros(self.length, self.n, self.m)
    }
}

/// `g(t, x, u)`, with `f(t, v)(x) = g(t, x, v(x))`.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    Zero,
    /// `g = u`.
    Linear,
    /// `g = c t x (L - x) u^p`.
    PowerLaw { c: f64, p: f64 },
    Expression(Expression),
}

impl Nonlinearity {
    pub fn g(&self, t: f64, x: f64, u: f64, length: f64) -> Result<f64> {
        Ok(match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear => u,
            Nonlinearity::PowerLaw { c, p } => c * t * x * (length - x) * u.powf(*p),
            Nonlinearity::Expression(e) => e.eval(Bindings { t, x, u })?,
        })
    }

    /// Rejects `g` if it is negative or fails to evaluate anywhere on a
    /// lattice over `[0, 1] x [0, L] x [0, rho]`.
    pub fn validate(&self, length: f64, rho: f64) -> Result<()> {
        if let Nonlinearity::PowerLaw { c, p } = self {
            if !(*c >= 0.0 && *p >= 0.0) {
                return Err(Error::Validation(format!("power law needs c >= 0 and p >= 0, got c = {c}, p = {p}")));
            }
        }
        let k = SIGN_CHECK_POINTS;
        let at = |i: usize, hi: f64| hi * i as f64 / (k - 1) as f64;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let (t, x, u) = (at(a, 1.0), at(b, length), at(c, rho));
                    let value = self.g(t, x, u, length).map_err(|e| {
                        Error::Validation(format!("g fails to evaluate at (t, x, u) = ({t}, {x}, {u}): {e}"))
                    })?;
                    if !(value >= 0.0) {
                        return Err(Error::Validation(format!(
                            "g must be nonnegative for u >= 0, but g({t}, {x}, {u}) = {value}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Pointwise `f(t, v)` with no domain or sign checks.
    pub fn apply(&self, t: f64, v: &GridFunction) -> Result<GridFunction> {
        let length = v.length();
        let values = v
            .values()
            .iter()
            .enumerate()
            .map(|(i, &u)| self.g(t, v.x(i), u, length))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(length, values)
    }
}

impl SourceTerm for Nonlinearity {
    fn eval(&self, t: f64, v: &GridFunction) -> Result<GridFunction> {
        self.apply(t, v)
    }
}

fn trapezoid(series: &[f64], m: usize) -> f64 {
    let dt = 1.0 / m as f64;
    let interior: f64 = series[1..series.len() - 1].iter().sum();
    dt * (interior + 0.5 * (series[0] + series[series.len() - 1]))
}

fn weighted_trapezoid(series: &[f64], weights: &[f64], m: usize) -> f64 {
    let products: Vec<f64> = series.iter().zip(weights).map(|(a, b)| a * b).collect();
    trapezoid(&products, m)
}

/// Scalar functional `beta` of the sensor time series `t -> y(t)(x*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Beta {
    /// `int_0^1 exp(phi(t)) dt`.
    ExpIntegral,
    /// `phi(t_1)` at a snapped time node.
    PointEval { node: usize, snap_distance: f64 },
    /// `int_0^1 w(t) phi(t) dt`, weights sampled at the time nodes.
    WeightedIntegral { weights: Vec<f64> },
}

impl Beta {
    pub fn point_eval(grid: &Grid, t: f64) -> Result<Self> {
        let (node, snap_distance) = grid.snap_time(t)?;
        Ok(Beta::PointEval { node, snap_distance })
    }

    pub fn weighted_integral(grid: &Grid, weights: Vec<f64>) -> Result<Self> {
        check_time_weights(grid, &weights)?;
        Ok(Beta::WeightedIntegral { weights })
    }

    pub fn eval(&self, series: &[f64]) -> Result<f64> {
        let m = series.len() - 1;
        let value = match self {
            Beta::ExpIntegral => trapezoid(&series.iter().map(|v| v.exp()).collect::<Vec<_>>(), m),
            Beta::PointEval { node, .. } => *series.get(*node).ok_or_else(|| {
                Error::DimensionMismatch(format!("time node {node} beyond a series of {} nodes", series.len()))
            })?,
            Beta::WeightedIntegral { weights } => {
                if weights.len() != series.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} weights for {} time nodes",
                        weights.len(),
                        series.len()
                    )));
                }
                weighted_trapezoid(series, weights, m)
            }
        };
        if !value.is_finite() {
            return Err(Error::Validation(format!("beta evaluated to {value}")));
        }
        Ok(value)
    }
}

fn check_time_weights(grid: &Grid, weights: &[f64]) -> Result<()> {
    if weights.len() != grid.m + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} time nodes",
            weights.len(),
            grid.m + 1
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Validation(format!("weights must be finite and nonnegative, found {w}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipointTerm {
    pub requested_time: f64,
    pub node: usize,
    pub snap_distance: f64,
    pub coeff: f64,
}

/// The functional initial condition `B`. Every form maps the cone into the
/// cone: profiles, coefficients and weights are nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlocalOperator {
    /// `B(y)(x) = alpha(x) beta(y(.)(x*))`.
    Pointwise { alpha: GridFunction, beta: Beta, sensor: usize },
    /// `B(y) = sum_i c_i y(t_i)`.
    Multipoint { terms: Vec<MultipointTerm> },
    /// `B(y) = y(1)`.
    Periodic,
    /// `B(y) = int_0^1 w(s) y(s) ds`.
    IntegralAverage { weights: Vec<f64> },
}

impl NonlocalOperator {
    pub fn pointwise(grid: &Grid, alpha: GridFunction, beta: Beta, sensor_x: f64) -> Result<Self> {
        if alpha.n() != grid.n || alpha.length() != grid.length {
            return Err(Error::DimensionMismatch("alpha profile does not live on the problem grid".into()));
        }
        if let ConeStatus::Outside(v) | ConeStatus::ClampedInside(v) = is_in_cone(&alpha, ConeTolerance::EXACT) {
            return Err(Error::Validation(format!("alpha must be nonnegative, found -{v}")));
        }
        let sensor = grid.space_node(sensor_x).ok_or_else(|| {
            Error::Validation(format!(
                "sensor x* = {sensor_x} is not a grid point (spacing {}, n = {})",
                grid.h(),
                grid.n
            ))
        })?;
        if let Beta::PointEval { node, .. } = beta {
            if node > grid.m {
                return Err(Error::Validation(format!("beta evaluation node {node} beyond m = {}", grid.m)));
            }
        }
        if let Beta::WeightedIntegral { weights } = &beta {
            check_time_weights(grid, weights)?;
        }
        Ok(NonlocalOperator::Pointwise { alpha, beta, sensor })
    }

    pub fn multipoint(grid: &Grid, times: &[f64], coeffs: &[f64]) -> Result<Self> {
        if times.len() != coeffs.len() {
            return Err(Error::Validation(format!(
                "multipoint condition has {} times but {} coefficients",
                times.len(),
                coeffs.len()
            )));
        }
        let terms = times
            .iter()
            .zip(coeffs)
            .map(|(&t, &coeff)| {
                if !(coeff >= 0.0) || !coeff.is_finite() {
                    return Err(Error::Validation(format!(
                        "multipoint coefficients must be nonnegative, found {coeff}"
                    )));
                }
                let (node, snap_distance) = grid.snap_time(t)?;
                if snap_distance > 0.0 {
                    log::debug!("multipoint time {t} snapped to node {node} (distance {snap_distance:e})");
                }
                Ok(MultipointTerm {
                    requested_time: t,
                    node,
                    snap_distance,
                    coeff,
                })
            })
            .collect::<Result<_>>()?;
        Ok(NonlocalOperator::Multipoint { terms })
    }

    pub fn integral_average(grid: &Grid, weights: Vec<f64>) -> Result<Self> {
        check_time_weights(grid, &weights)?;
        Ok(NonlocalOperator::IntegralAverage { weights })
    }

    /// `B(y)` with no domain or sign checks.
    pub fn apply(&self, y: &Trajectory) -> Result<GridFunction> {
        let zero = GridFunction::zeros(y.length(), y.n());
        match self {
            NonlocalOperator::Pointwise { alpha, beta, sensor } => {
                y.node(0).ensure_composable(alpha)?;
                let value = beta.eval(&y.time_series(*sensor))?;
                Ok(alpha.scale(value))
            }
            NonlocalOperator::Multipoint { terms } => {
                let mut acc = zero;
                for term in terms {
                    let node = y.nodes().get(term.node).ok_or_else(|| {
                        Error::DimensionMismatch(format!("multipoint node {} beyond m = {}", term.node, y.m()))
                    })?;
                    acc.axpy(term.coeff, node)?;
                }
                Ok(acc)
            }
            NonlocalOperator::Periodic => Ok(y.node(y.m()).clone()),
            NonlocalOperator::IntegralAverage { weights } => {
                if weights.len() != y.m() + 1 {
                    return Err(Error::DimensionMismatch(format!(
                        "{} weights for {} time nodes",
                        weights.len(),
                        y.m() + 1
                    )));
                }
                let dt = y.dt();
                let mut acc = zero;
                for (j, (w, node)) in weights.iter().zip(y.nodes()).enumerate() {
                    let end = if j == 0 || j == y.m() { 0.5 } else { 1.0 };
                    acc.axpy(end * dt * w, node)?;
                }
                Ok(acc)
            }
        }
    }
}

impl InitialOperator for NonlocalOperator {
    fn eval(&self, y: &Trajectory) -> Result<GridFunction> {
        self.apply(y)
    }
}

/// Lower-bound data for the hypothesis checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateData {
    /// `f(t, y(t)) >= delta_rho(t)` on the sphere.
    pub delta_rho: Trajectory,
    /// `B(y) >= eta_rho` on the sphere.
    pub eta_rho: GridFunction,
    /// Index of `t0` on the time grid, at least 1.
    pub t0_index: usize,
    pub rho: f64,
}

impl CertificateData {
    pub fn new(grid: &Grid, delta_rho: Trajectory, eta_rho: GridFunction, t0: f64, rho: f64) -> Result<Self> {
        delta_rho.ensure_grid(grid.length, grid.n, grid.m)?;
        if eta_rho.n() != grid.n || eta_rho.length() != grid.length {
            return Err(Error::DimensionMismatch("eta_rho does not live on the problem grid".into()));
        }
        if !trajectory_cone_status(&delta_rho, ConeTolerance::EXACT).is_feasible() {
            return Err(Error::Validation("delta_rho must be nonnegative".into()));
        }
        if !is_in_cone(&eta_rho, ConeTolerance::EXACT).is_feasible() {
            return Err(Error::Validation("eta_rho must be nonnegative".into()));
        }
        if !(t0 > 0.0 && t0 <= 1.0) {
            return Err(Error::Validation(format!("t0 must lie in (0, 1], got {t0}")));
        }
        let (t0_index, distance) = grid.snap_time(t0)?;
        if distance > 1e-12 || t0_index == 0 {
            return Err(Error::Validation(format!("t0 = {t0} is not a positive time node (m = {})", grid.m)));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Validation(format!("rho must be positive, got {rho}")));
        }
        Ok(CertificateData {
            delta_rho,
            eta_rho,
            t0_index,
            rho,
        })
    }

    /// `delta_rho = 0`, `eta_rho = 0`, `t0 = 1`. Always valid, never passes
    /// the positivity test of the lower bounds.
    pub fn trivial(grid: &Grid, rho: f64) -> Result<Self> {
        Self::new(grid, grid.zero_trajectory(), GridFunction::zeros(grid.length, grid.n), 1.0, rho)
    }
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub grid: Grid,
    pub semigroup: SemigroupHandle,
    pub nonlinearity: Nonlinearity,
    pub nonlocal: NonlocalOperator,
    pub certificate: CertificateData,
    pub tolerance: ConeTolerance,
    pub mild: MildConfig,
}

impl ProblemInstance {
    pub fn new(
        grid: Grid,
        semigroup: SemigroupHandle,
        nonlinearity: Nonlinearity,
        nonlocal: NonlocalOperator,
        certificate: CertificateData,
    ) -> Result<Self> {
        if semigroup.n() != grid.n || semigroup.length() != grid.length {
            return Err(Error::DimensionMismatch("semigroup does not live on the problem grid".into()));
        }
        if let NonlocalOperator::Pointwise { alpha, .. } = &nonlocal {
            if alpha.n() != grid.n || alpha.length() != grid.length {
                return Err(Error::DimensionMismatch("alpha profile does not live on the problem grid".into()));
            }
        }
        certificate.delta_rho.ensure_grid(grid.length, grid.n, grid.m)?;
        nonlinearity.validate(grid.length, certificate.rho)?;
        Ok(ProblemInstance {
            grid,
            semigroup,
            nonlinearity,
            nonlocal,
            certificate,
            tolerance: ConeTolerance::default(),
            mild: MildConfig::default(),
        })
    }

    pub fn with_tolerance(mut self, tolerance: ConeTolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_mild(mut self, mild: MildConfig) -> Self {
        self.mild = mild;
        self
    }

    pub fn rho(&self) -> f64 {
        self.certificate.rho
    }

    /// The same instance on the sphere of radius `rho`. The lower-bound data
    /// is kept as given.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Validation(format!("rho must be positive, got {rho}")));
        }
        let mut out = self.clone();
        if rho > self.certificate.rho {
            out.nonlinearity.validate(self.grid.length, rho)?;
        }
        out.certificate.rho = rho;
        Ok(out)
    }

    pub fn with_semigroup(&self, semigroup: SemigroupHandle) -> Result<Self> {
        if semigroup.n() != self.grid.n || semigroup.length() != self.grid.length {
            return Err(Error::DimensionMismatch("semigroup does not live on the problem grid".into()));
        }
        let mut out = self.clone();
        out.semigroup = semigroup;
        Ok(out)
    }

    fn check_ball(&self, norm: f64) -> Result<()> {
        let rho = self.rho();
        if norm > rho * (1.0 + DOMAIN_SLACK) {
            return Err(Error::DomainExceeded { norm, rho });
        }
        Ok(())
    }

    /// `f(t, v)` for `v` in the cone with `|v| <= rho`.
    pub fn eval_f(&self, t: f64, v: &GridFunction) -> Result<GridFunction> {
        self.check_ball(norm_sup(v))?;
        let v = clamp_to_cone(v, self.tolerance)?;
        clamp_to_cone(&self.nonlinearity.apply(t, &v)?, self.tolerance)
    }

    /// `B(y)` for `y` in the cone with `|y|_C <= rho`.
    pub fn eval_b(&self, y: &Trajectory) -> Result<GridFunction> {
        if y.n() != self.grid.n || y.length() != self.grid.length {
            return Err(Error::DimensionMismatch("trajectory does not live on the problem grid".into()));
        }
        self.check_ball(norm_c(y))?;
        let y = clamp_trajectory(y, self.tolerance)?;
        clamp_to_cone(&self.nonlocal.apply(&y)?, self.tolerance)
    }

    pub fn source(&self) -> CheckedSource<'_> {
        CheckedSource(self)
    }

    pub fn initial(&self) -> CheckedInitial<'_> {
        CheckedInitial(self)
    }

    pub fn apply_t(&self, y: &Trajectory) -> Result<Trajectory> {
        mild::apply_t(&self.semigroup, &self.initial(), &self.source(), y, self.mild, self.tolerance)
    }

    pub fn residual(&self, y: &Trajectory, lambda: f64) -> Result<f64> {
        mild::residual(&self.semigroup, &self.initial(), &self.source(), y, lambda, self.mild, self.tolerance)
    }

    /// `|U(t0) eta_rho + int_0^{t0} U(t0 - s) delta_rho(s) ds|`, with the
    /// instance's Duhamel quadrature.
    pub fn compute_h4(&self) -> Result<f64> {
        let data = &self.certificate;
        let j0 = data.t0_index;
        let t0 = self.grid.t(j0);
        let mut value = self.semigroup.apply(t0, &data.eta_rho)?;
        let integral = duhamel(
            &self.semigroup,
            &data.delta_rho.nodes()[..=j0],
            self.grid.m,
            self.mild.quadrature,
        )?;
        value.axpy(1.0, &integral[j0])?;
        Ok(norm_sup(&value))
    }

    /// Samples the sphere `|y|_C = rho` of the cone and measures the bounds
    /// and lower-bound margins. Sampling can falsify the inequalities, not
    /// prove them.
    pub fn check_hypotheses(&self, samples: usize, seed: u64) -> Result<HypothesisReport> {
        let samples = samples.max(1);
        let rho = self.rho();
        let stats = (0..samples)
            .into_par_iter()
            .map(|k| {
                let y = if k == 0 {
                    // constant rho: attains sup f for g monotone in u
                    Trajectory::constant(&GridFunction::new(self.grid.length, vec![rho; self.grid.n])?, self.grid.m)
                } else {
                    let mut rng = sample_rng(seed, k as u64);
                    random_sphere_trajectory(&self.grid, rho, &mut rng)
                };
                self.sample_stats(&y)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut acc = SampleStats::default();
        for s in stats {
            acc.merge(&s);
        }
        let h4_value = self.compute_h4()?;
        let axioms = self.semigroup.check_axioms(&AxiomCheck {
            composition_samples: 16,
            positivity_samples: 32,
            seed,
            ..AxiomCheck::default()
        })?;
        let clamp = self.tolerance.clamp_eps;
        Ok(HypothesisReport {
            samples,
            rho,
            m_rho: acc.m_rho,
            n_rho: acc.n_rho,
            h2_margin: acc.h2_margin,
            h3_margin: acc.h3_margin,
            h4_value,
            bound_d: self.semigroup.bound_d(),
            pass_h1: axioms.passed,
            pass_h2: acc.h2_margin >= -clamp,
            pass_h3: acc.h3_margin >= -clamp,
            pass_h4: h4_value > 0.0,
        })
    }

    fn sample_stats(&self, y: &Trajectory) -> Result<SampleStats> {
        let mut stats = SampleStats::default();
        for (j, v) in y.nodes().iter().enumerate() {
            let f = self.eval_f(self.grid.t(j), v)?;
            stats.m_rho = stats.m_rho.max(norm_sup(&f));
            stats.h2_margin = stats.h2_margin.min(f.sub(self.certificate.delta_rho.node(j))?.min_value());
        }
        let b = self.eval_b(y)?;
        stats.n_rho = norm_sup(&b);
        stats.h3_margin = b.sub(&self.certificate.eta_rho)?.min_value();
        Ok(stats)
    }
}

#[derive(Debug, Clone, Copy)]
struct SampleStats {
    m_rho: f64,
    n_rho: f64,
    h2_margin: f64,
    h3_margin: f64,
}

impl Default for SampleStats {
    fn default() -> Self {
        SampleStats {
            m_rho: 0.0,
            n_rho: 0.0,
            h2_margin: f64::INFINITY,
            h3_margin: f64::INFINITY,
        }
    }
}

impl SampleStats {
    fn merge(&mut self, other: &SampleStats) {
        self.m_rho = self.m_rho.max(other.m_rho);
        self.n_rho = self.n_rho.max(other.n_rho);
        self.h2_margin = self.h2_margin.min(other.h2_margin);
        self.h3_margin = self.h3_margin.min(other.h3_margin);
    }
}

/// The per-sample random stream `k` derived from `seed`.
pub(crate) fn sample_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// A random nonnegative trajectory with `|y|_C = rho` exactly. Alternates
/// between independent uniform entries and smooth separable profiles
/// `a(t) sin(pi x / L)^q` with a nonnegative quadratic envelope.
pub fn random_sphere_trajectory(grid: &Grid, rho: f64, rng: &mut impl Rng) -> Trajectory {
    let y = if rng.random::<bool>() {
        Trajectory::from_fn(grid.m, |_| {
            GridFunction::new(grid.length, (0..grid.n).map(|_| rng.random::<f64>()).collect()).expect("finite")
        })
    } else {
        let q: f64 = rng.random_range(0.5..3.0);
        let (a, b, c): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let shape = grid
            .profile(|x| (std::f64::consts::PI * x / grid.length).sin().max(0.0).powf(q))
            .expect("finite");
        Trajectory::from_fn(grid.m, |t| shape.scale(a + b * t + c * t * t))
    }
    .expect("same grid");
    rescale_to_norm(&y, rho).unwrap_or_else(|| {
        Trajectory::constant(&GridFunction::new(grid.length, vec![rho; grid.n]).expect("finite"), grid.m)
    })
}

pub struct CheckedSource<'a>(&'a ProblemInstance);

impl SourceTerm for CheckedSource<'_> {
    fn eval(&self, t: f64, v: &GridFunction) -> Result<GridFunction> {
        self.0.eval_f(t, v)
    }
}

pub struct CheckedInitial<'a>(&'a ProblemInstance);

impl InitialOperator for CheckedInitial<'_> {
    fn eval(&self, y: &Trajectory) -> Result<GridFunction> {
        self.0.eval_b(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub rho: f64,
    /// Largest `|f(t, y(t))|` seen over the sample; a lower estimate of the
    /// true bound.
    pub m_rho: f64,
    /// Largest `|B(y)|` seen over the sample.
    pub n_rho: f64,
    /// Smallest entry of `f(t, y(t)) - delta_rho(t)`.
    pub h2_margin: f64,
    /// Smallest entry of `B(y) - eta_rho`.
    pub h3_margin: f64,
    pub h4_value: f64,
    pub bound_d: f64,
    pub pass_h1: bool,
    pub pass_h2: bool,
    pub pass_h3: bool,
    pub pass_h4: bool,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.pass_h1 && self.pass_h2 && self.pass_h3 && self.pass_h4
    }
}

pub mod presets {
    //! Ready-made instances.

    use super::*;
    use std::f64::consts::PI;

    pub const EXAMPLE_G: &str = "t*x*(pi - x)*u^2";
    pub const EXAMPLE_ALPHA: &str = "sin(x)";

    /// Heat flow on `[0, pi]` with source `t x (pi - x) u^2`, initial
    /// condition `sin(x) int_0^1 exp(u(t, pi/2)) dt`, lower bounds
    /// `delta_rho = 0`, `eta_rho = sin` and `t0 = 1`. Needs odd `n` so that
    /// `pi/2` is a grid point.
    pub fn heat_example(n: usize, m: usize, rho: f64) -> Result<ProblemInstance> {
        let grid = Grid::new(PI, n, m)?;
        let g = Expression::parse(EXAMPLE_G, &[Var::T, Var::X, Var::U])?;
        let alpha_expr = Expression::parse(EXAMPLE_ALPHA, &[Var::X])?;
        let alpha = grid.profile(|x| alpha_expr.eval(Bindings { x, ..Default::default() }).unwrap_or(f64::NAN))?;
        let nonlocal = NonlocalOperator::pointwise(&grid, alpha.clone(), Beta::ExpIntegral, PI / 2.0)?;
        // eta_rho = alpha * nu_rho with nu_rho = 1
        let certificate = CertificateData::new(&grid, grid.zero_trajectory(), alpha, 1.0, rho)?;
        ProblemInstance::new(
            grid,
            SemigroupHandle::spectral_heat(PI, n)?,
            Nonlinearity::Expression(g),
            nonlocal,
            certificate,
        )
    }

    /// `f(t, v) = v` with `B(y) = int_0^1 y(s) ds` on `[0, pi]`.
    pub fn linear_average(n: usize, m: usize, rho: f64) -> Result<ProblemInstance> {
        let grid = Grid::new(PI, n, m)?;
        let nonlocal = NonlocalOperator::integral_average(&grid, vec![1.0; m + 1])?;
        ProblemInstance::new(
            grid,
            SemigroupHandle::spectral_heat(PI, n)?,
            Nonlinearity::Linear,
            nonlocal,
            CertificateData::trivial(&grid, rho)?,
        )
    }

    /// `f = 0`, `B = 0`: `T` vanishes identically.
    pub fn degenerate(n: usize, m: usize, rho: f64) -> Result<ProblemInstance> {
        let grid = Grid::new(PI, n, m)?;
        ProblemInstance::new(
            grid,
            SemigroupHandle::spectral_heat(PI, n)?,
            Nonlinearity::Zero,
            NonlocalOperator::multipoint(&grid, &[], &[])?,
            CertificateData::trivial(&grid, rho)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn example_source_value() {
        let p = heat_example(63, 64, 2.0).unwrap();
        let v = GridFunction::new(PI, vec![2.0; 63]).unwrap();
        let f = p.eval_f(1.0, &v).unwrap();
        assert!((f.values()[31] - PI * PI).abs() < 1e-12);
        assert!((f.values()[31] - 9.8696044).abs() < 1e-7);
    }

    #[test]
    fn zero_and_linear_presets() {
        let grid = Grid::new(PI, 7, 4).unwrap();
        let v = grid.profile(|x| x.sin()).unwrap();
        assert_eq!(Nonlinearity::Zero.apply(0.3, &v).unwrap(), GridFunction::zeros(PI, 7));
        assert_eq!(Nonlinearity::Linear.apply(0.3, &v).unwrap(), v);
        let pl = Nonlinearity::PowerLaw { c: 1.0, p: 2.0 };
        let w = pl.apply(1.0, &v).unwrap();
        let x = v.x(3);
        assert!((w.values()[3] - x * (PI - x) * x.sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn eval_f_domain_and_sign_errors() {
        let p = heat_example(15, 8, 1.0).unwrap();
        let big = GridFunction::new(PI, vec![1.5; 15]).unwrap();
        assert!(matches!(p.eval_f(0.5, &big), Err(Error::DomainExceeded { .. })));
        let mut values = vec![0.5; 15];
        values[3] = -0.2;
        let neg = GridFunction::new(PI, values).unwrap();
        assert!(matches!(p.eval_f(0.5, &neg), Err(Error::ConeViolation { .. })));
    }

    #[test]
    fn negative_g_is_rejected() {
        let g = Expression::parse("u - 0.5", &[Var::T, Var::X, Var::U]).unwrap();
        assert!(matches!(Nonlinearity::Expression(g).validate(PI, 1.0), Err(Error::Validation(_))));
        let g = Expression::parse("1 / (x - 1)", &[Var::T, Var::X, Var::U]).unwrap();
        assert!(Nonlinearity::Expression(g).validate(2.0, 1.0).is_err());
    }

    #[test]
    fn example_b_at_zero_is_sine() {
        let p = heat_example(63, 64, 1.0).unwrap();
        let b = p.eval_b(&p.grid.zero_trajectory()).unwrap();
        let s = p.grid.profile(f64::sin).unwrap();
        assert!(norm_sup(&b.sub(&s).unwrap()) < 1e-15);
    }

    #[test]
    fn periodic_and_multipoint() {
        let grid = Grid::new(PI, 7, 8).unwrap();
        let v = grid.profile(|x| x.sin()).unwrap();
        let y = Trajectory::from_fn(8, |t| v.scale(t)).unwrap();
        assert_eq!(NonlocalOperator::Periodic.apply(&y).unwrap(), v);
        let mp = NonlocalOperator::multipoint(&grid, &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let b = mp.apply(&y).unwrap();
        assert!(norm_sup(&b.sub(&v.scale(0.5)).unwrap()) < 1e-16);
        assert!(matches!(
            NonlocalOperator::multipoint(&grid, &[0.5], &[-1.0]),
            Err(Error::Validation(_))
        ));
        let snapped = NonlocalOperator::multipoint(&grid, &[0.3], &[1.0]).unwrap();
        let NonlocalOperator::Multipoint { terms } = snapped else { unreachable!() };
        assert_eq!(terms[0].node, 2);
        assert!((terms[0].snap_distance - 0.05).abs() < 1e-15);
    }

    #[test]
    fn integral_average_of_linear_ramp() {
        let grid = Grid::new(PI, 5, 10).unwrap();
        let v = grid.profile(|x| x.sin()).unwrap();
        let y = Trajectory::from_fn(10, |t| v.scale(t)).unwrap();
        let b = NonlocalOperator::integral_average(&grid, vec![1.0; 11]).unwrap().apply(&y).unwrap();
        assert!(norm_sup(&b.sub(&v.scale(0.5)).unwrap()) < 1e-15);
    }

    #[test]
    fn sensor_must_be_grid_point() {
        let grid = Grid::new(PI, 63, 64).unwrap();
        let alpha = grid.profile(f64::sin).unwrap();
        assert!(matches!(
            NonlocalOperator::pointwise(&grid, alpha.clone(), Beta::ExpIntegral, 1.0),
            Err(Error::Validation(_))
        ));
        assert!(NonlocalOperator::pointwise(&grid, alpha, Beta::ExpIntegral, PI / 2.0).is_ok());
        assert!(heat_example(64, 64, 1.0).is_err());
    }

    #[test]
    fn h4_for_example_is_one_over_e() {
        for n in [15usize, 31, 63] {
            let p = heat_example(n, 64, 1.0).unwrap();
            let h4 = p.compute_h4().unwrap();
            assert!((h4 - 1.0 / E).abs() <= 1e-6, "n = {n}: {h4}");
        }
    }

    #[test]
    fn h4_with_zero_data_is_zero() {
        let p = linear_average(15, 16, 1.0).unwrap();
        assert_eq!(p.compute_h4().unwrap(), 0.0);
    }

    #[test]
    fn h4_with_sine_source() {
        let mut p = heat_example(31, 64, 1.0).unwrap();
        let s = p.grid.profile(f64::sin).unwrap();
        p.certificate.eta_rho = GridFunction::zeros(PI, 31);
        p.certificate.delta_rho = Trajectory::constant(&s, 64);
        let h4 = p.compute_h4().unwrap();
        assert!((h4 - (1.0 - 1.0 / E)).abs() < 1e-9, "{h4}");
    }

    #[test]
    fn h4_with_early_t0_uses_partial_integral() {
        let mut p = heat_example(31, 8, 1.0).unwrap();
        let s = p.grid.profile(f64::sin).unwrap();
        p.certificate.eta_rho = GridFunction::zeros(PI, 31);
        p.certificate.delta_rho = Trajectory::constant(&s, 8);
        for j0 in 1..=8 {
            p.certificate.t0_index = j0;
            let t0 = j0 as f64 / 8.0;
            let h4 = p.compute_h4().unwrap();
            // trapezoid panel on the first node, fourth order beyond
            let tol = if j0 == 1 { 1e-3 } else { 1e-5 };
            assert!((h4 - (1.0 - (-t0).exp())).abs() < tol, "j0 = {j0}: {h4}");
        }
    }

    #[test]
    fn example_hypotheses_hold() {
        let p = heat_example(63, 32, 1.0).unwrap();
        let report = p.check_hypotheses(64, 7).unwrap();
        assert!(report.all_passed(), "{report:?}");
        assert!((report.h4_value - 1.0 / E).abs() < 1e-6);
        // the constant-rho sample reaches the true sup pi^2/4 at t = 1, x = pi/2
        assert!(report.m_rho <= PI * PI / 4.0 + 1e-9);
        assert!((report.m_rho - PI * PI / 4.0).abs() < 1e-12);
        assert!(report.n_rho >= 1.0);
    }

    #[test]
    fn coarse_spectral_grid_reports_h1_failure() {
        // truncated sine series rings below zero for spikes at small t
        let p = heat_example(15, 16, 1.0).unwrap();
        let report = p.check_hypotheses(16, 3).unwrap();
        assert!(!report.pass_h1);
        assert!(report.pass_h2 && report.pass_h3 && report.pass_h4);
        assert!(!report.all_passed());
    }

    #[test]
    fn large_delta_fails_h2() {
        let mut p = heat_example(31, 32, 1.0).unwrap();
        p.certificate.delta_rho = Trajectory::constant(&GridFunction::new(PI, vec![10.0; 31]).unwrap(), 32);
        let report = p.check_hypotheses(32, 1).unwrap();
        assert!(!report.pass_h2);
        assert!(report.pass_h3);
    }

    #[test]
    fn point_eval_beta_fails_h3_against_twice_alpha() {
        let mut p = heat_example(31, 32, 1.0).unwrap();
        let alpha = p.grid.profile(f64::sin).unwrap();
        p.nonlocal = NonlocalOperator::pointwise(&p.grid, alpha.clone(), Beta::point_eval(&p.grid, 0.0).unwrap(), PI / 2.0)
            .unwrap();
        p.certificate.eta_rho = alpha.scale(2.0);
        let report = p.check_hypotheses(32, 1).unwrap();
        assert!(!report.pass_h3);
    }

    #[test]
    fn sphere_samples_are_pinned_and_positive() {
        let grid = Grid::new(PI, 15, 16).unwrap();
        for k in 0..200u64 {
            let mut rng = sample_rng(11, k);
            let rho = 0.1 + k as f64 * 0.05;
            let y = random_sphere_trajectory(&grid, rho, &mut rng);
            assert!((norm_c(&y) - rho).abs() <= 1e-12 * rho);
            assert_eq!(trajectory_cone_status(&y, ConeTolerance::EXACT), ConeStatus::Inside);
        }
    }

    #[test]
    fn checker_is_deterministic() {
        let p = heat_example(15, 16, 0.5).unwrap();
        let a = p.check_hypotheses(24, 99).unwrap();
        let b = p.check_hypotheses(24, 99).unwrap();
        assert_eq!(a, b);
    }
}
