//! Reference computations that share no solver code with the library: the
//! semigroup is the dense matrix exponential, the Duhamel integral is the
//! direct scheme, the problem data are plain closures, and the eigenpairs
//! come from a generic dense eigensolver or Newton's method.

#![allow(dead_code)]

use std::f64::consts::PI;

use mildcone::lattice::{GridFunction, Trajectory};
use mildcone::mild::{apply_t_unclamped, MildConfig, Quadrature};
use mildcone::semigroup::SemigroupHandle;
use mildcone::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub fn oracle_cfg() -> MildConfig {
    MildConfig::new(Quadrature::SimpsonDirect)
}

pub fn flatten(y: &Trajectory) -> Vec<f64> {
    y.nodes().iter().flat_map(|v| v.values().iter().copied()).collect()
}

pub fn unflatten(data: &[f64], length: f64, n: usize) -> Trajectory {
    Trajectory::new(
        data.chunks_exact(n)
            .map(|c| GridFunction::new(length, c.to_vec()).unwrap())
            .collect(),
    )
    .unwrap()
}

/// `1 / mu` for the dominant eigenvalue `mu` of the linear operator
/// `T y = U(t) int_0^1 y + int_0^t U(t - s) y(s) ds`, assembled column by
/// column and handed to a general (nonsymmetric) eigensolver.
pub fn linear_average_lambda(n: usize, m: usize) -> f64 {
    let u = SemigroupHandle::matrix_exp_oracle(PI, n).unwrap();
    let dt = 1.0 / m as f64;
    let b = |y: &Trajectory| -> Result<GridFunction> {
        let mut acc = GridFunction::zeros(PI, n);
        for (j, node) in y.nodes().iter().enumerate() {
            let w = if j == 0 || j == m { 0.5 * dt } else { dt };
            acc.axpy(w, node)?;
        }
        Ok(acc)
    };
    let f = |_: f64, v: &GridFunction| -> Result<GridFunction> { Ok(v.clone()) };
    let size = n * (m + 1);
    let columns: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|k| {
            let mut e = vec![0.0; size];
            e[k] = 1.0;
            flatten(&apply_t_unclamped(&u, &b, &f, &unflatten(&e, PI, n), oracle_cfg()).unwrap())
        })
        .collect();
    let a = DMatrix::from_fn(size, size, |r, c| columns[c][r]);
    let mu = a
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.norm(), *z))
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap()
        .1;
    assert!(mu.im.abs() <= 1e-10 * mu.re, "dominant eigenvalue {mu} is not real");
    1.0 / mu.re
}

/// `T` of the heat example with the matrix-exponential semigroup, written
/// from the formulas: `f = t x (pi - x) v^2`,
/// `B(y) = sin(x) int_0^1 exp(y(t, pi/2)) dt`.
pub struct ExampleOperator {
    pub n: usize,
    pub m: usize,
    u: SemigroupHandle,
    sensor: usize,
}

impl ExampleOperator {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(n % 2 == 1, "pi/2 must be a grid point");
        ExampleOperator {
            n,
            m,
            u: SemigroupHandle::matrix_exp_oracle(PI, n).unwrap(),
            sensor: n / 2,
        }
    }

    pub fn apply(&self, data: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let sensor = self.sensor;
        let b = move |y: &Trajectory| -> Result<GridFunction> {
            let series: Vec<f64> = y.nodes().iter().map(|v| v.values()[sensor].exp()).collect();
            let integral =
                (series.iter().sum::<f64>() - 0.5 * (series[0] + series[m])) / m as f64;
            GridFunction::from_fn(PI, n, |x| x.sin() * integral)
        };
        let f = |t: f64, v: &GridFunction| -> Result<GridFunction> {
            let vals = v
                .values()
                .iter()
                .enumerate()
                .map(|(i, u)| {
                    let x = v.x(i);
                    t * x * (PI - x) * u * u
                })
                .collect();
            GridFunction::new(PI, vals)
        };
        flatten(&apply_t_unclamped(&self.u, &b, &f, &unflatten(data, PI, n), oracle_cfg()).unwrap())
    }
}

/// Log-sum-exp smoothing of the maximum with sharpness `kappa`, and its
/// gradient.
fn smooth_max(y: &[f64], kappa: f64) -> (f64, Vec<f64>) {
    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = y.iter().map(|v| (kappa * (v - top)).exp()).collect();
    let total: f64 = weights.iter().sum();
    (top + total.ln() / kappa, weights.into_iter().map(|w| w / total).collect())
}

pub struct NewtonResult {
    pub lambda: f64,
    pub y: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `F(Y, lambda) = (Y - lambda T(Y), smax(Y) - rho) = 0` by damped
/// Newton with a forward-difference Jacobian, starting from the first
/// Dirichlet mode.
pub fn example_newton(n: usize, m: usize, rho: f64) -> NewtonResult {
    let op = ExampleOperator::new(n, m);
    let size = n * (m + 1);
    let kappa = 1e8 / rho;

    let residual = |y: &[f64], lambda: f64| -> (DVector<f64>, Vec<f64>) {
        let ty = op.apply(y);
        let (smax, _) = smooth_max(y, kappa);
        let mut r = DVector::zeros(size + 1);
        for k in 0..size {
            r[k] = y[k] - lambda * ty[k];
        }
        r[size] = smax - rho;
        (r, ty)
    };

    let mut y: Vec<f64> = (0..=m)
        .flat_map(|_| (0..n).map(|i| rho * ((i + 1) as f64 * PI / (n + 1) as f64).sin()))
        .collect();
    let ty0 = op.apply(&y);
    let mut lambda = rho / ty0.iter().copied().fold(0.0, f64::max);

    let mut iterations = 0;
    let (mut r, mut ty) = residual(&y, lambda);
    while r.amax() > 1e-13 * rho && iterations < 30 {
        iterations += 1;
        let h = 1e-7 * rho;
        let columns: Vec<Vec<f64>> = (0..size)
            .into_par_iter()
            .map(|k| {
                let mut yk = y.clone();
                yk[k] += h;
                let tk = op.apply(&yk);
                tk.iter().zip(&ty).map(|(a, b)| (a - b) / h).collect()
            })
            .collect();
        let (_, grad) = smooth_max(&y, kappa);
        let mut jac = DMatrix::zeros(size + 1, size + 1);
        for c in 0..size {
            for rr in 0..size {
                jac[(rr, c)] = -lambda * columns[c][rr];
            }
            jac[(c, c)] += 1.0;
            jac[(size, c)] = grad[c];
        }
        for rr in 0..size {
            jac[(rr, size)] = -ty[rr];
        }
        let step = jac.lu().solve(&(-&r)).expect("nonsingular Jacobian");

        let norm0 = r.norm();
        let mut theta = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + theta * d).collect();
            let trial_lambda = lambda + theta * step[size];
            let (tr, tty) = residual(&trial, trial_lambda);
            if tr.norm() < norm0 || theta < 1e-4 {
                y = trial;
                lambda = trial_lambda;
                r = tr;
                ty = tty;
                break;
            }
            theta *= 0.5;
        }
    }
    NewtonResult {
        lambda,
        y,
        residual: r.amax(),
        iterations,
    }
}
