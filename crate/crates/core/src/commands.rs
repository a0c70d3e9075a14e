//! Command dispatch behind the CLI.

use std::path::{Path, PathBuf};

use rand::Rng;

use crate::config::ConfigDocument;
use crate::eigensolver::{self, sine_start, EigenpairCertificate};
use crate::error::{Error, Result};
use crate::lattice::{norm_c, norm_sup, GridFunction};
use crate::mild::{self, MildConfig, Quadrature, Rule};
use crate::output::{self, OracleRow};
use crate::problem::{sample_rng, ProblemInstance};
use crate::semigroup::SemigroupHandle;

/// Highest sine mode in the random smooth profiles of `oracle-compare`.
const ORACLE_MODES: usize = 16;
const ORACLE_TIMES: [f64; 3] = [0.1, 0.5, 1.0];
const SEMIGROUP_TOL: f64 = 1e-6;
const SCHEME_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Solve,
    Sweep,
    Check,
    Verify { certificate: PathBuf, strict_tol: f64 },
    OracleCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Ran, but the result did not pass: no convergence, a failed hypothesis,
    /// a rejected certificate, a numerical error.
    Failure,
    ConfigError,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Failure => 1,
            Status::ConfigError => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Success
        } else {
            Status::Failure
        }
    }

    pub fn from_error(e: &Error) -> Self {
        if e.is_configuration() {
            Status::ConfigError
        } else {
            Status::Failure
        }
    }
}

/// Runs `cmd`, writing artifacts under `out` (or the document's output
/// directory). Errors are logged and folded into the status.
pub fn run_command(cmd: &Command, doc: &ConfigDocument, out: Option<&Path>) -> Status {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| doc.base_dir.join(&doc.output.dir));
    match run(cmd, doc, &dir) {
        Ok(status) => status,
        Err(e) => {
            log::error!("{e}");
            Status::from_error(&e)
        }
    }
}

fn run(cmd: &Command, doc: &ConfigDocument, dir: &Path) -> Result<Status> {
    let p = doc.build_instance()?;
    let cfg = doc.solver_config()?;
    std::fs::create_dir_all(dir)?;
    let names = &doc.output;
    match cmd {
        Command::Solve => {
            log::info!("solving at rho = {} on n = {}, m = {}", p.rho(), p.grid.n, p.grid.m);
            let cert = eigensolver::solve(&p, &cfg)?;
            output::write_json(&dir.join(&names.certificate), &cert)?;
            output::write_trajectory_csv(output::create_file(&dir.join(&names.trajectory))?, &cert.y)?;
            println!(
                "lambda = {:.12e}  residual_rel = {:.3e}  iterations = {}  converged = {}",
                cert.lambda, cert.residual_rel, cert.iterations, cert.converged
            );
            Ok(Status::from_pass(cert.converged))
        }
        Command::Sweep => {
            let rhos = doc.rhos();
            log::info!("sweeping {} radii", rhos.len());
            let entries = eigensolver::sweep(&p, &rhos, &cfg)?;
            let stem = names.certificate.strip_suffix(".json").unwrap_or(&names.certificate);
            for (k, e) in entries.iter().enumerate() {
                match (&e.certificate, &e.error) {
                    (Some(c), _) => output::write_json(&dir.join(format!("{stem}_{k:03}.json")), c)?,
                    (None, Some(msg)) => log::error!("rho = {}: {msg}", e.rho),
                    (None, None) => {}
                }
            }
            output::write_summary_csv(output::create_file(&dir.join(&names.summary))?, &entries)?;
            for e in &entries {
                match &e.certificate {
                    Some(c) => println!(
                        "rho = {:<10} lambda = {:.12e}  residual_rel = {:.3e}  converged = {}",
                        e.rho, c.lambda, c.residual_rel, c.converged
                    ),
                    None => println!("rho = {:<10} failed", e.rho),
                }
            }
            Ok(Status::from_pass(entries.iter().all(|e| e.converged())))
        }
        Command::Check => {
            let report = p.check_hypotheses(cfg.hypothesis_samples, cfg.seed)?;
            output::write_json(&dir.join(&names.report), &report)?;
            println!(
                "h4_value = {:.10}  M_rho = {:.6e}  N_rho = {:.6e}  pass = [{}, {}, {}, {}]",
                report.h4_value, report.m_rho, report.n_rho, report.pass_h1, report.pass_h2, report.pass_h3, report.pass_h4
            );
            for (flag, name) in [
                (report.pass_h1, "semigroup"),
                (report.pass_h2, "source lower bound"),
                (report.pass_h3, "initial-condition lower bound"),
                (report.pass_h4, "positivity of the lower-bound solution"),
            ] {
                if !flag {
                    log::error!("hypothesis check failed: {name}");
                }
            }
            Ok(Status::from_pass(report.all_passed()))
        }
        Command::Verify { certificate, strict_tol } => {
            let text = std::fs::read_to_string(certificate)?;
            let cert: EigenpairCertificate = serde_json::from_str(&text)?;
            let v = eigensolver::verify_certificate_report(&p, &cert, *strict_tol)?;
            println!("{}", serde_json::to_string_pretty(&v)?);
            if !v.passed {
                log::error!("certificate rejected (residual_rel {:e}, strict_tol {strict_tol:e})", v.residual_rel);
            }
            Ok(Status::from_pass(v.passed))
        }
        Command::OracleCompare => {
            let rows = oracle_rows(&p, doc, cfg.seed)?;
            output::write_oracle_csv(output::create_file(&dir.join(&names.oracle))?, &rows)?;
            for r in &rows {
                let verdict = if r.tolerance.is_none() {
                    "info"
                } else if r.passed() {
                    "ok"
                } else {
                    "FAIL"
                };
                println!("{:<24} {:<28} {:.3e}  {verdict}", r.comparison, r.parameter, r.delta);
            }
            Ok(Status::from_pass(rows.iter().all(OracleRow::passed)))
        }
    }
}

/// Cross-implementation deltas: semigroups on smooth profiles, Duhamel
/// schemes and rules on the sine start, and the full operator.
pub fn oracle_rows(p: &ProblemInstance, doc: &ConfigDocument, seed: u64) -> Result<Vec<OracleRow>> {
    let (length, n, m) = (p.grid.length, p.grid.n, p.grid.m);
    let spectral = SemigroupHandle::spectral_heat(length, n)?;
    let dense = SemigroupHandle::matrix_exp_oracle_with(length, n, doc.semigroup.generator)?;
    let mut rows = Vec::new();

    let mut rng = sample_rng(seed, u64::MAX);
    let mut v = GridFunction::zeros(length, n);
    for k in 1..=n.min(ORACLE_MODES) {
        v.axpy(rng.random_range(-1.0..1.0), &GridFunction::sine_mode(length, n, k))?;
    }
    for t in ORACLE_TIMES {
        let a = spectral.apply(t, &v)?;
        let b = dense.apply(t, &v)?;
        rows.push(OracleRow {
            comparison: "semigroup".into(),
            parameter: format!("t={t}"),
            delta: norm_sup(&a.sub(&b)?) / norm_sup(&a),
            tolerance: Some(SEMIGROUP_TOL),
        });
    }

    let y = sine_start(length, n, m, p.rho())?;
    let source = p.source();
    let g = |q: Quadrature| mild::apply_g(&p.semigroup, &source, &y, MildConfig::new(q));
    let rel = |a: &crate::lattice::Trajectory, b: &crate::lattice::Trajectory| -> Result<f64> {
        Ok(norm_c(&a.sub(b)?) / norm_c(a).max(f64::MIN_POSITIVE))
    };
    for rule in [Rule::Trapezoid, Rule::Simpson] {
        let rec = g(Quadrature::new(rule, false))?;
        let direct = g(Quadrature::new(rule, true))?;
        rows.push(OracleRow {
            comparison: "duhamel-scheme".into(),
            parameter: format!("{rule:?} recurrence-vs-direct").to_lowercase(),
            delta: rel(&rec, &direct)?,
            tolerance: Some(SCHEME_TOL),
        });
    }
    let trap = g(Quadrature::TrapezoidDirect)?;
    let simpson = g(Quadrature::SimpsonDirect)?;
    rows.push(OracleRow {
        comparison: "duhamel-rule".into(),
        parameter: "trapezoid-vs-simpson".into(),
        delta: rel(&simpson, &trap)?,
        tolerance: None,
    });

    let other = p
        .with_semigroup(dense)?
        .with_mild(MildConfig::new(p.mild.quadrature.counterpart()));
    let t_primary = p.apply_t(&y)?;
    let t_other = other.apply_t(&y)?;
    rows.push(OracleRow {
        comparison: "operator-t".into(),
        parameter: "primary-vs-independent".into(),
        delta: rel(&t_primary, &t_other)?,
        tolerance: Some(SEMIGROUP_TOL),
    });
    Ok(rows)
}
