//! Grid stand-ins for the lattice of continuous functions vanishing on the
//! boundary of `[0, L]`, and for continuous trajectories `[0, 1] -> E`.
//!
//! A [`GridFunction`] stores values at the `n` interior points
//! `x_i = (i + 1) L / (n + 1)`; the two boundary values are zero and never
//! stored. A [`Trajectory`] stores `m + 1` such profiles at `t_j = j / m`.
//!
//! The positive cone is the set of grid functions with nonnegative entries.
//! Its normality constant is 1: `0 <= u <= v` entrywise implies
//! `|u|_sup <= |v|_sup`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    length: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(length: f64, values: Vec<f64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("domain length {length} must be positive")));
        }
        if values.is_empty() {
            return Err(Error::InvalidGrid("a grid function needs at least one interior point".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("value {} at index {i} is not finite", values[i])));
        }
        Ok(GridFunction { length, values })
    }

    pub fn zeros(length: f64, n: usize) -> Self {
        assert!(length > 0.0 && n > 0);
        GridFunction {
            length,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at the interior grid points.
    pub fn from_fn(length: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let h = length / (n as f64 + 1.0);
        let values = (0..n).map(|i| f((i as f64 + 1.0) * h)).collect();
        Self::new(length, values)
    }

    /// The Dirichlet mode `sin(k pi x / L)` sampled on the grid.
    pub fn sine_mode(length: f64, n: usize, k: usize) -> Self {
        let h = length / (n as f64 + 1.0);
        let values = (0..n)
            .map(|i| (k as f64 * std::f64::consts::PI * (i as f64 + 1.0) * h / length).sin())
            .collect();
        GridFunction { length, values }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.n() as f64 + 1.0)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.spacing()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_composable(&self, other: &GridFunction) -> bool {
        self.n() == other.n() && self.length == other.length
    }

    pub fn ensure_composable(&self, other: &GridFunction) -> Result<()> {
        if self.is_composable(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "grid (L = {}, n = {}) vs (L = {}, n = {})",
                self.length,
                self.n(),
                other.length,
                other.n()
            )))
        }
    }

    /// Builds a function on the same grid. Values must be finite.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.n());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        GridFunction {
            length: self.length,
            values,
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.with_values(self.values.iter().map(|v| alpha * v).collect())
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.ensure_composable(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.ensure_composable(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &GridFunction) -> Result<()> {
        self.ensure_composable(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Sup-norm over the grid.
pub fn norm_sup(v: &GridFunction) -> f64 {
    v.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeTolerance {
    pub clamp_eps: f64,
    pub violation_eps: f64,
}

impl Default for ConeTolerance {
    fn default() -> Self {
        ConeTolerance {
            clamp_eps: 1e-10,
            violation_eps: 1e-8,
        }
    }
}

impl ConeTolerance {
    /// Exact comparisons: any negative entry is outside.
    pub const EXACT: ConeTolerance = ConeTolerance {
        clamp_eps: 0.0,
        violation_eps: 0.0,
    };

    pub fn new(clamp_eps: f64, violation_eps: f64) -> Result<Self> {
        if !(clamp_eps >= 0.0 && violation_eps >= 0.0 && clamp_eps <= violation_eps) {
            return Err(Error::Validation(format!(
                "cone tolerance needs 0 <= clamp_eps ({clamp_eps}) <= violation_eps ({violation_eps})"
            )));
        }
        Ok(ConeTolerance {
            clamp_eps,
            violation_eps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeStatus {
    Inside,
    /// Negative entries exist but none below `-violation_eps`; carries the
    /// largest violation.
    ClampedInside(f64),
    Outside(f64),
}

impl ConeStatus {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, ConeStatus::Outside(_))
    }

    pub fn violation(&self) -> f64 {
        match *self {
            ConeStatus::Inside => 0.0,
            ConeStatus::ClampedInside(v) | ConeStatus::Outside(v) => v,
        }
    }
}

pub fn is_in_cone(v: &GridFunction, tol: ConeTolerance) -> ConeStatus {
    let min = v.min_value();
    if min >= 0.0 {
        ConeStatus::Inside
    } else if -min > tol.violation_eps {
        ConeStatus::Outside(-min)
    } else {
        ConeStatus::ClampedInside(-min)
    }
}

/// Replaces roundoff negatives by zero. Fails if any entry is below
/// `-violation_eps`.
pub fn clamp_to_cone(v: &GridFunction, tol: ConeTolerance) -> Result<GridFunction> {
    match is_in_cone(v, tol) {
        ConeStatus::Inside => Ok(v.clone()),
        ConeStatus::ClampedInside(violation) => {
            if violation > tol.clamp_eps {
                log::debug!("clamping cone violation {violation:e} above clamp_eps");
            }
            Ok(v.with_values(v.values.iter().map(|x| x.max(0.0)).collect()))
        }
        ConeStatus::Outside(max_violation) => Err(Error::ConeViolation { max_violation }),
    }
}

/// `u <= v` in the cone order, i.e. `v - u` is (up to tolerance) in the cone.
pub fn order_leq(u: &GridFunction, v: &GridFunction, tol: ConeTolerance) -> Result<bool> {
    Ok(is_in_cone(&v.sub(u)?, tol).is_feasible())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr", into = "TrajectoryRepr")]
pub struct Trajectory {
    nodes: Vec<GridFunction>,
}

impl Trajectory {
    pub fn new(nodes: Vec<GridFunction>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("a trajectory needs at least one time step".into()));
        }
        for node in &nodes[1..] {
            nodes[0].ensure_composable(node)?;
        }
        Ok(Trajectory { nodes })
    }

    pub fn zeros(length: f64, n: usize, m: usize) -> Self {
        assert!(m >= 1);
        Trajectory {
            nodes: vec![GridFunction::zeros(length, n); m + 1],
        }
    }

    /// Node `j` is `profile(t_j)`.
    pub fn from_fn(m: usize, mut profile: impl FnMut(f64) -> GridFunction) -> Result<Self> {
        Self::new((0..=m).map(|j| profile(j as f64 / m as f64)).collect())
    }

    pub fn constant(v: &GridFunction, m: usize) -> Self {
        assert!(m >= 1);
        Trajectory {
            nodes: vec![v.clone(); m + 1],
        }
    }

    pub fn m(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n(&self) -> usize {
        self.nodes[0].n()
    }

    pub fn length(&self) -> f64 {
        self.nodes[0].length()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.m() as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.m() as f64
    }

    pub fn nodes(&self) -> &[GridFunction] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> &GridFunction {
        &self.nodes[j]
    }

    pub fn into_nodes(self) -> Vec<GridFunction> {
        self.nodes
    }

    pub fn is_composable(&self, other: &Trajectory) -> bool {
        self.m() == other.m() && self.nodes[0].is_composable(&other.nodes[0])
    }

    pub fn ensure_composable(&self, other: &Trajectory) -> Result<()> {
        if self.m() != other.m() {
            return Err(Error::DimensionMismatch(format!(
                "trajectory time steps {} vs {}",
                self.m(),
                other.m()
            )));
        }
        self.nodes[0].ensure_composable(&other.nodes[0])
    }

    pub fn ensure_grid(&self, length: f64, n: usize, m: usize) -> Result<()> {
        if self.length() != length || self.n() != n || self.m() != m {
            return Err(Error::DimensionMismatch(format!(
                "trajectory (L = {}, n = {}, m = {}) vs expected (L = {length}, n = {n}, m = {m})",
                self.length(),
                self.n(),
                self.m()
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl FnMut(&GridFunction) -> GridFunction) -> Trajectory {
        Trajectory {
            nodes: self.nodes.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl FnMut(&GridFunction) -> Result<GridFunction>) -> Result<Trajectory> {
        Ok(Trajectory {
            nodes: self.nodes.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn scale(&self, alpha: f64) -> Trajectory {
        self.map(|v| v.scale(alpha))
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        self.ensure_composable(other)?;
        Ok(Trajectory {
            nodes: self.nodes.iter().zip(&other.nodes).map(|(a, b)| a.add(b)).collect::<Result<_>>()?,
        })
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.ensure_composable(other)?;
        Ok(Trajectory {
            nodes: self.nodes.iter().zip(&other.nodes).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?,
        })
    }

    /// Values at the sensor index over time, `t_j -> y(t_j)(x_i)`.
    pub fn time_series(&self, i: usize) -> Vec<f64> {
        self.nodes.iter().map(|v| v.values()[i]).collect()
    }

    /// Location `(j, i)` of the entry of largest magnitude.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_val = -1.0;
        for (j, node) in self.nodes.iter().enumerate() {
            for (i, v) in node.values().iter().enumerate() {
                if v.abs() > best_val {
                    best_val = v.abs();
                    best = (j, i);
                }
            }
        }
        best
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [GridFunction] {
        &mut self.nodes
    }
}

/// Sup over time nodes of the grid sup-norm.
pub fn norm_c(y: &Trajectory) -> f64 {
    y.nodes.iter().map(norm_sup).fold(0.0, f64::max)
}

/// Worst cone status over all nodes.
pub fn trajectory_cone_status(y: &Trajectory, tol: ConeTolerance) -> ConeStatus {
    let min = y.nodes.iter().map(GridFunction::min_value).fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        ConeStatus::Inside
    } else if -min > tol.violation_eps {
        ConeStatus::Outside(-min)
    } else {
        ConeStatus::ClampedInside(-min)
    }
}

pub fn clamp_trajectory(y: &Trajectory, tol: ConeTolerance) -> Result<Trajectory> {
    y.try_map(|v| clamp_to_cone(v, tol))
}

/// Rescales `y` onto the sphere `|y|_C = rho`. The largest entry is pinned to
/// exactly `rho` so the norm is exact rather than off by a rounding.
pub fn rescale_to_norm(y: &Trajectory, rho: f64) -> Option<Trajectory> {
    let norm = norm_c(y);
    if !(norm > 0.0) {
        return None;
    }
    let (j, i) = y.argmax_abs();
    let mut out = y.scale(rho / norm);
    let pinned = &mut out.nodes_mut()[j].values_mut()[i];
    *pinned = rho.copysign(*pinned);
    Some(out)
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRepr {
    length: f64,
    n: usize,
    m: usize,
    nodes: Vec<Vec<f64>>,
}

impl From<Trajectory> for TrajectoryRepr {
    fn from(y: Trajectory) -> Self {
        TrajectoryRepr {
            length: y.length(),
            n: y.n(),
            m: y.m(),
            nodes: y.nodes.into_iter().map(GridFunction::into_values).collect(),
        }
    }
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = Error;

    fn try_from(repr: TrajectoryRepr) -> Result<Self> {
        if repr.nodes.len() != repr.m + 1 {
            return Err(Error::DimensionMismatch(format!(
                "trajectory declares m = {} but carries {} nodes",
                repr.m,
                repr.nodes.len()
            )));
        }
        let nodes = repr
            .nodes
            .into_iter()
            .map(|values| {
                if values.len() != repr.n {
                    return Err(Error::DimensionMismatch(format!(
                        "node has {} values, expected n = {}",
                        values.len(),
                        repr.n
                    )));
                }
                GridFunction::new(repr.length, values)
            })
            .collect::<Result<_>>()?;
        Trajectory::new(nodes)
    }
}
