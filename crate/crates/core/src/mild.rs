//! The solution operator `T y(t) = U(t) B(y) + int_0^t U(t - s) f(s, y(s)) ds`
//! on discrete trajectories, split as `T = H + G`.
//!
//! The Duhamel integral is collocated on the trajectory's own time grid. The
//! semigroup factor is applied exactly through `U(a) U(b) = U(a + b)`; only
//! the integrand samples are weighted by a quadrature rule. Every rule here
//! has positive weights, so a positive semigroup keeps `G` monotone in `f`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{clamp_trajectory, norm_c, ConeTolerance, GridFunction, Trajectory};
use crate::semigroup::SemigroupHandle;

/// The nonlinearity `f(t, v)` of the evolution problem.
pub trait SourceTerm {
    fn eval(&self, t: f64, v: &GridFunction) -> Result<GridFunction>;
}

impl<F> SourceTerm for F
where
    F: Fn(f64, &GridFunction) -> Result<GridFunction>,
{
    fn eval(&self, t: f64, v: &GridFunction) -> Result<GridFunction> {
        self(t, v)
    }
}

/// The functional initial condition `B(y)`.
pub trait InitialOperator {
    fn eval(&self, y: &Trajectory) -> Result<GridFunction>;
}

impl<F> InitialOperator for F
where
    F: Fn(&Trajectory) -> Result<GridFunction>,
{
    fn eval(&self, y: &Trajectory) -> Result<GridFunction> {
        self(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Composite trapezoid, second order.
    Trapezoid,
    /// Composite Simpson, with a 3/8 panel first when the step count is odd
    /// and a trapezoid panel for the first node. Fourth order.
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    /// `O(m)` semigroup applications, sequential in time.
    TrapezoidRecurrence,
    /// `O(m^2)` semigroup applications; cross-check for the recurrence.
    TrapezoidDirect,
    #[default]
    SimpsonRecurrence,
    SimpsonDirect,
}

impl Quadrature {
    pub fn new(rule: Rule, direct: bool) -> Self {
        match (rule, direct) {
            (Rule::Trapezoid, false) => Quadrature::TrapezoidRecurrence,
            (Rule::Trapezoid, true) => Quadrature::TrapezoidDirect,
            (Rule::Simpson, false) => Quadrature::SimpsonRecurrence,
            (Rule::Simpson, true) => Quadrature::SimpsonDirect,
        }
    }

    pub fn rule(self) -> Rule {
        match self {
            Quadrature::TrapezoidRecurrence | Quadrature::TrapezoidDirect => Rule::Trapezoid,
            Quadrature::SimpsonRecurrence | Quadrature::SimpsonDirect => Rule::Simpson,
        }
    }

    pub fn is_direct(self) -> bool {
        matches!(self, Quadrature::TrapezoidDirect | Quadrature::SimpsonDirect)
    }

    /// The other evaluation scheme for the same rule.
    pub fn counterpart(self) -> Self {
        Quadrature::new(self.rule(), !self.is_direct())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MildConfig {
    pub quadrature: Quadrature,
}

impl MildConfig {
    pub fn new(quadrature: Quadrature) -> Self {
        MildConfig { quadrature }
    }
}

/// Weights, in units of `dt`, for `int_0^{t_j}` sampled at `t_0..=t_j`.
pub fn quadrature_weights(rule: Rule, j: usize) -> Vec<f64> {
    let mut w = vec![0.0; j + 1];
    if j == 0 {
        return w;
    }
    match rule {
        Rule::Trapezoid => {
            w.iter_mut().for_each(|x| *x = 1.0);
            w[0] = 0.5;
            w[j] = 0.5;
        }
        Rule::Simpson if j == 1 => {
            w[0] = 0.5;
            w[1] = 0.5;
        }
        Rule::Simpson => {
            let start = if j % 2 == 1 {
                for (i, c) in [3.0, 9.0, 9.0, 3.0].into_iter().enumerate() {
                    w[i] += c / 8.0;
                }
                3
            } else {
                0
            };
            let mut i = start;
            while i < j {
                w[i] += 1.0 / 3.0;
                w[i + 1] += 4.0 / 3.0;
                w[i + 2] += 1.0 / 3.0;
                i += 2;
            }
        }
    }
    w
}

fn ensure_semigroup_grid(u: &SemigroupHandle, y: &Trajectory) -> Result<()> {
    if u.n() != y.n() || u.length() != y.length() {
        return Err(Error::DimensionMismatch(format!(
            "semigroup on (L = {}, n = {}) vs trajectory on (L = {}, n = {})",
            u.length(),
            u.n(),
            y.length(),
            y.n()
        )));
    }
    Ok(())
}

fn lag(steps: usize, m: usize) -> f64 {
    steps as f64 / m as f64
}

/// `G_j ~ int_0^{t_j} U(t_j - s) F(s) ds` from samples `F(t_i)` on the grid
/// `t_i = i / m`. `samples` may stop short of `t_m`; at least two are needed.
pub fn duhamel(
    u: &SemigroupHandle,
    samples: &[GridFunction],
    m: usize,
    quadrature: Quadrature,
) -> Result<Vec<GridFunction>> {
    if m < 2 {
        return Err(Error::InvalidGrid(format!("Duhamel quadrature needs m >= 2 time steps, got {m}")));
    }
    if samples.len() < 2 || samples.len() > m + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} integrand samples on a grid of {} nodes",
            samples.len(),
            m + 1
        )));
    }
    let last = samples.len() - 1;
    let dt = 1.0 / m as f64;
    let zero = GridFunction::zeros(samples[0].length(), samples[0].n());

    if quadrature.is_direct() {
        let rule = quadrature.rule();
        return (0..=last)
            .into_par_iter()
            .map(|j| {
                let mut acc = zero.clone();
                for (i, w) in quadrature_weights(rule, j).into_iter().enumerate() {
                    if w != 0.0 {
                        acc.axpy(w * dt, &u.apply(lag(j - i, m), &samples[i])?)?;
                    }
                }
                Ok(acc)
            })
            .collect();
    }

    // U(a)(x) + c * z, the common recurrence update
    let step = |prev: &GridFunction, a: f64, c: f64, z: &GridFunction| -> Result<GridFunction> {
        let mut out = u.apply(a, prev)?;
        out.axpy(c, z)?;
        Ok(out)
    };
    let mut out = Vec::with_capacity(last + 1);
    out.push(zero);
    match quadrature.rule() {
        Rule::Trapezoid => {
            for j in 0..last {
                let mut carried = out[j].clone();
                carried.axpy(0.5 * dt, &samples[j])?;
                let next = step(&carried, dt, 0.5 * dt, &samples[j + 1])?;
                out.push(next);
            }
        }
        Rule::Simpson => {
            let mut first = samples[0].scale(0.5 * dt);
            first = step(&first, dt, 0.5 * dt, &samples[1])?;
            out.push(first);
            for j in 2..=last {
                let next = if j == 3 {
                    let mut acc = u.apply(lag(3, m), &samples[0].scale(3.0 * dt / 8.0))?;
                    acc.axpy(1.0, &u.apply(lag(2, m), &samples[1].scale(9.0 * dt / 8.0))?)?;
                    acc.axpy(1.0, &u.apply(dt, &samples[2].scale(9.0 * dt / 8.0))?)?;
                    acc.axpy(3.0 * dt / 8.0, &samples[3])?;
                    acc
                } else {
                    let mut carried = out[j - 2].clone();
                    carried.axpy(dt / 3.0, &samples[j - 2])?;
                    let mut acc = u.apply(lag(2, m), &carried)?;
                    acc.axpy(1.0, &u.apply(dt, &samples[j - 1].scale(4.0 * dt / 3.0))?)?;
                    acc.axpy(dt / 3.0, &samples[j])?;
                    acc
                };
                out.push(next);
            }
        }
    }
    Ok(out)
}

/// `H y(t_j) = U(t_j) B(y)`.
pub fn apply_h(u: &SemigroupHandle, b: &impl InitialOperator, y: &Trajectory) -> Result<Trajectory> {
    ensure_semigroup_grid(u, y)?;
    let initial = b.eval(y)?;
    let m = y.m();
    Trajectory::new((0..=m).map(|j| u.apply(lag(j, m), &initial)).collect::<Result<_>>()?)
}

/// `G y(t_j) = int_0^{t_j} U(t_j - s) f(s, y(s)) ds`.
pub fn apply_g(u: &SemigroupHandle, f: &impl SourceTerm, y: &Trajectory, cfg: MildConfig) -> Result<Trajectory> {
    ensure_semigroup_grid(u, y)?;
    let samples = y
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, v)| f.eval(y.t(j), v))
        .collect::<Result<Vec<_>>>()?;
    for s in &samples {
        y.node(0).ensure_composable(s)?;
    }
    Trajectory::new(duhamel(u, &samples, y.m(), cfg.quadrature)?)
}

/// Evaluates `G` with both schemes of the configured rule and fails if they
/// differ by more than `tol` relative to `|G y|_C`.
pub fn apply_g_cross_validated(
    u: &SemigroupHandle,
    f: &impl SourceTerm,
    y: &Trajectory,
    cfg: MildConfig,
    tol: f64,
) -> Result<Trajectory> {
    let primary = apply_g(u, f, y, cfg)?;
    let other = apply_g(u, f, y, MildConfig::new(cfg.quadrature.counterpart()))?;
    let scale = norm_c(&primary).max(f64::MIN_POSITIVE);
    let delta = norm_c(&primary.sub(&other)?) / scale;
    if delta > tol {
        return Err(Error::QuadratureMismatch { delta, tol });
    }
    Ok(primary)
}

/// `H y + G y` without the cone repair.
pub fn apply_t_unclamped(
    u: &SemigroupHandle,
    b: &impl InitialOperator,
    f: &impl SourceTerm,
    y: &Trajectory,
    cfg: MildConfig,
) -> Result<Trajectory> {
    apply_h(u, b, y)?.add(&apply_g(u, f, y, cfg)?)
}

/// `T y = H y + G y`, with roundoff negatives clamped to zero. Negatives
/// beyond `tol.violation_eps` are a [`Error::ConeViolation`].
pub fn apply_t(
    u: &SemigroupHandle,
    b: &impl InitialOperator,
    f: &impl SourceTerm,
    y: &Trajectory,
    cfg: MildConfig,
    tol: ConeTolerance,
) -> Result<Trajectory> {
    clamp_trajectory(&apply_t_unclamped(u, b, f, y, cfg)?, tol)
}

/// `|y - lambda T y|_C`, the defect of the mild eigen-equation.
pub fn residual(
    u: &SemigroupHandle,
    b: &impl InitialOperator,
    f: &impl SourceTerm,
    y: &Trajectory,
    lambda: f64,
    cfg: MildConfig,
    tol: ConeTolerance,
) -> Result<f64> {
    let ty = apply_t(u, b, f, y, cfg, tol)?;
    Ok(norm_c(&y.sub(&ty.scale(lambda))?))
}
