//! Positive eigenpairs `y = lambda T(y)` with `|y|_C = rho`.
//!
//! The search is a normalized cone fixed-point iteration: every iterate is
//! rescaled back onto the sphere, so for linear `T` it reduces to power
//! iteration. The residual of the final iterate, recomputed after the loop,
//! is what the certificate vouches for.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{norm_c, rescale_to_norm, trajectory_cone_status, ConeTolerance, GridFunction, Trajectory};
use crate::mild::{MildConfig, Quadrature};
use crate::problem::{random_sphere_trajectory, sample_rng, HypothesisReport, ProblemInstance};
use crate::semigroup::SemigroupHandle;

/// `|T z|_C` at or below this fraction of `rho` counts as no mass.
const MASS_FLOOR: f64 = 1e-14;

/// Tolerance on `|y|_C = rho` accepted by certificate verification.
pub const NORM_PIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialGuess {
    /// `rho sin(pi x / L)`, constant in time.
    SineProfile,
    RandomCone { seed: u64 },
    UserSupplied { trajectory: Trajectory },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `|z_{k+1} - z_k|_C <= tol_rel rho`.
    pub tol_rel: f64,
    /// Weight of the new direction, in `(0, 1]`.
    pub damping: f64,
    pub initial_guess: InitialGuess,
    /// Samples for the attached hypothesis report; 0 skips it.
    pub hypothesis_samples: usize,
    pub seed: u64,
    /// In a sweep, start each solve from the previous solution.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 500,
            tol_rel: 1e-8,
            damping: 1.0,
            initial_guess: InitialGuess::SineProfile,
            hypothesis_samples: 64,
            seed: 0,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be positive".into()));
        }
        if !(self.tol_rel > 0.0 && self.tol_rel.is_finite()) {
            return Err(Error::Validation(format!("tol_rel must be positive, got {}", self.tol_rel)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Validation(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub step_diff: f64,
    pub t_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenpairCertificate {
    pub rho: f64,
    pub lambda: f64,
    /// `|y - lambda T y|_C / rho`.
    pub residual_rel: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    pub hypothesis_report: Option<HypothesisReport>,
    pub y: Trajectory,
}

fn initial_iterate(p: &ProblemInstance, guess: &InitialGuess) -> Result<Trajectory> {
    let grid = &p.grid;
    let rho = p.rho();
    let start = match guess {
        InitialGuess::SineProfile => {
            let k = std::f64::consts::PI / grid.length;
            Trajectory::constant(&grid.profile(|x| (k * x).sin())?, grid.m)
        }
        InitialGuess::RandomCone { seed } => random_sphere_trajectory(grid, rho, &mut sample_rng(*seed, 0)),
        InitialGuess::UserSupplied { trajectory } => {
            trajectory.ensure_grid(grid.length, grid.n, grid.m)?;
            if !trajectory_cone_status(trajectory, ConeTolerance::EXACT).is_feasible() {
                return Err(Error::Validation("initial guess must be nonnegative".into()));
            }
            trajectory.clone()
        }
    };
    rescale_to_norm(&start, rho).ok_or_else(|| Error::Validation("initial guess is identically zero".into()))
}

/// Normalized Picard iteration `z <- rho T(z) / |T(z)|_C`, optionally
/// damped and renormalized, from `cfg.initial_guess`.
pub fn solve(p: &ProblemInstance, cfg: &SolverConfig) -> Result<EigenpairCertificate> {
    solve_observed(p, cfg, |_, _| {})
}

/// [`solve`], calling `observer(k, z_k)` on every iterate, the initial one
/// included.
pub fn solve_observed(
    p: &ProblemInstance,
    cfg: &SolverConfig,
    mut observer: impl FnMut(usize, &Trajectory),
) -> Result<EigenpairCertificate> {
    cfg.validate()?;
    let rho = p.rho();
    let theta = cfg.damping;
    let mut z = initial_iterate(p, &cfg.initial_guess)?;
    observer(0, &z);
    let mut history = Vec::new();
    let mut step_ok = false;

    for iteration in 0..cfg.max_iters {
        let tz = p.apply_t(&z)?;
        let t_norm = norm_c(&tz);
        if !(t_norm > MASS_FLOOR * rho) {
            return Err(Error::NoMass { norm: t_norm, iteration });
        }
        let mut next = tz.scale(rho / t_norm);
        if theta < 1.0 {
            next = z.scale(1.0 - theta).add(&next.scale(theta))?;
        }
        let next = rescale_to_norm(&next, rho).ok_or(Error::NoMass { norm: 0.0, iteration })?;
        let step_diff = norm_c(&next.sub(&z)?) / rho;
        history.push(IterationRecord { step_diff, t_norm });
        z = next;
        observer(iteration + 1, &z);
        if step_diff <= cfg.tol_rel {
            step_ok = true;
            break;
        }
    }

    let ty = p.apply_t(&z)?;
    let t_norm = norm_c(&ty);
    if !(t_norm > MASS_FLOOR * rho) {
        return Err(Error::NoMass { norm: t_norm, iteration: history.len() });
    }
    let lambda = rho / t_norm;
    let residual_rel = norm_c(&z.sub(&ty.scale(lambda))?) / rho;
    // a damped step understates the residual by the factor theta
    let converged = step_ok && residual_rel <= 10.0 * cfg.tol_rel / theta;
    if !converged {
        log::warn!(
            "rho = {rho}: no convergence after {} iterations (residual {residual_rel:e})",
            history.len()
        );
    }
    let hypothesis_report = match cfg.hypothesis_samples {
        0 => None,
        samples => Some(p.check_hypotheses(samples, cfg.seed)?),
    };
    Ok(EigenpairCertificate {
        rho,
        lambda,
        residual_rel,
        iterations: history.len(),
        converged,
        history,
        hypothesis_report,
        y: z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub rho: f64,
    pub certificate: Option<EigenpairCertificate>,
    pub error: Option<String>,
}

impl SweepEntry {
    pub fn converged(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.converged)
    }
}

fn sweep_entry(p: &ProblemInstance, rho: f64, cfg: &SolverConfig) -> SweepEntry {
    let outcome = p.with_rho(rho).and_then(|q| solve(&q, cfg));
    match outcome {
        Ok(cert) => SweepEntry {
            rho,
            certificate: Some(cert),
            error: None,
        },
        Err(e) => SweepEntry {
            rho,
            certificate: None,
            error: Some(e.to_string()),
        },
    }
}

/// One solve per radius. Entries are independent and run in parallel unless
/// `cfg.warm_start` chains them; failures are recorded per entry.
pub fn sweep(p: &ProblemInstance, rhos: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepEntry>> {
    if rhos.is_empty() {
        return Err(Error::Validation("sweep needs at least one rho".into()));
    }
    if let Some(r) = rhos.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::Validation(format!("rho must be positive, got {r}")));
    }
    cfg.validate()?;
    if !cfg.warm_start {
        return Ok(rhos.par_iter().map(|&rho| sweep_entry(p, rho, cfg)).collect());
    }
    let mut cfg = cfg.clone();
    let mut entries = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let entry = sweep_entry(p, rho, &cfg);
        if let Some(cert) = &entry.certificate {
            cfg.initial_guess = InitialGuess::UserSupplied {
                trajectory: cert.y.clone(),
            };
        }
        entries.push(entry);
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// Residual on the independent path, relative to `rho`.
    pub residual_rel: f64,
    pub norm_error: f64,
    pub cone_feasible: bool,
    pub lambda_positive: bool,
    pub passed: bool,
}

/// Recomputes the residual of `cert` with the dense matrix-exponential
/// semigroup and the direct (non-recursive) Duhamel scheme.
pub fn verify_certificate_report(p: &ProblemInstance, cert: &EigenpairCertificate, strict_tol: f64) -> Result<Verification> {
    cert.y.ensure_grid(p.grid.length, p.grid.n, p.grid.m)?;
    let rho = cert.rho;
    let independent = p
        .with_rho(rho)?
        .with_semigroup(SemigroupHandle::matrix_exp_oracle(p.grid.length, p.grid.n)?)?
        .with_mild(MildConfig::new(Quadrature::new(p.mild.quadrature.rule(), true)));

    let norm_error = (norm_c(&cert.y) - rho).abs();
    let cone_feasible = trajectory_cone_status(&cert.y, p.tolerance).is_feasible();
    let lambda_positive = cert.lambda > 0.0 && cert.lambda.is_finite();
    let residual_rel = if cone_feasible && norm_error <= NORM_PIN_TOL * rho {
        match independent.residual(&cert.y, cert.lambda) {
            Ok(r) => r / rho,
            Err(e) => {
                log::warn!("independent residual failed: {e}");
                f64::INFINITY
            }
        }
    } else {
        f64::INFINITY
    };
    let passed =
        lambda_positive && cone_feasible && norm_error <= NORM_PIN_TOL * rho && residual_rel <= strict_tol;
    Ok(Verification {
        residual_rel,
        norm_error,
        cone_feasible,
        lambda_positive,
        passed,
    })
}

pub fn verify_certificate(p: &ProblemInstance, cert: &EigenpairCertificate, strict_tol: f64) -> bool {
    verify_certificate_report(p, cert, strict_tol).is_ok_and(|v| v.passed)
}

/// `rho sin(pi x / L)` on every node, pinned to the sphere.
pub fn sine_start(length: f64, n: usize, m: usize, rho: f64) -> Result<Trajectory> {
    let k = std::f64::consts::PI / length;
    let y = Trajectory::constant(&GridFunction::from_fn(length, n, |x| (k * x).sin())?, m);
    rescale_to_norm(&y, rho).ok_or_else(|| Error::Validation("degenerate grid".into()))
}
