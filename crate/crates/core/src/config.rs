//! JSON configuration documents.
//!
//! A document may name a `preset`; the preset is itself a document that the
//! user's document is merged over, key by key. Objects merge recursively
//! unless their `form` differs, in which case the user's object replaces the
//! preset's outright; a user `nonlinearity` always replaces the preset's.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::eigensolver::{EigenpairCertificate, InitialGuess, SolverConfig};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expression, Var};
use crate::lattice::{GridFunction, Trajectory};
use crate::mild::{MildConfig, Quadrature};
use crate::problem::{Beta, CertificateData, Grid, NonlocalOperator, Nonlinearity, ProblemInstance};
use crate::semigroup::{OracleGenerator, SemigroupHandle, SemigroupKind};

pub const PAPER_EXAMPLE: &str = "paper-example";

/// A number, or a closed-form expression without variables such as `"pi/2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self, field: &str) -> Result<f64> {
        let v = match self {
            Scalar::Number(v) => *v,
            Scalar::Expr(src) => parse(field, src, &[])?.eval(Bindings::default())?,
        };
        if !v.is_finite() {
            return Err(Error::schema(field, format!("value {v} is not finite")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "L")]
    pub length: Scalar,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub m: usize,
    #[serde(default)]
    pub quadrature: Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupSection {
    pub kind: SemigroupKind,
    /// Generator of the matrix-exponential semigroup.
    #[serde(default)]
    pub generator: OracleGenerator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityPreset {
    Zero,
    Linear,
    PaperExample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawSection {
    pub c: f64,
    pub p: f64,
}

/// Exactly one of the fields must be set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<NonlinearityPreset>,
    /// Over `t`, `x`, `u`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_law: Option<PowerLawSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BetaSection {
    ExpIntegral,
    PointEval { t: f64 },
    /// Weight expression over `t`.
    WeightedIntegral { weights: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlocalSection {
    Pointwise {
        /// Over `x`.
        alpha: String,
        beta: BetaSection,
        sensor_x: Scalar,
    },
    Multipoint {
        times: Vec<f64>,
        coeffs: Vec<f64>,
    },
    Periodic,
    IntegralAverage {
        /// Over `t`.
        weights: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    /// `"zero"` or an expression over `t`, `x`.
    #[serde(default = "zero_spec")]
    pub delta_rho: String,
    /// `"auto-from-alpha"`, `"zero"` or an expression over `x`.
    #[serde(default = "zero_spec")]
    pub eta_rho: String,
    /// Scale applied to alpha by `"auto-from-alpha"`.
    #[serde(default = "one")]
    pub nu_rho: f64,
    #[serde(default = "one_scalar")]
    pub t0: Scalar,
}

impl Default for CertificateSection {
    fn default() -> Self {
        CertificateSection {
            delta_rho: zero_spec(),
            eta_rho: zero_spec(),
            nu_rho: 1.0,
            t0: one_scalar(),
        }
    }
}

fn zero_spec() -> String {
    "zero".into()
}

fn one() -> f64 {
    1.0
}

fn one_scalar() -> Scalar {
    Scalar::Number(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuessSection {
    SineProfile,
    RandomCone,
    /// Path to a certificate or trajectory JSON file, relative to the config.
    UserSupplied(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_list: Option<Vec<f64>>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
    #[serde(default = "one")]
    pub damping: f64,
    #[serde(default = "default_guess")]
    pub initial_guess: InitialGuessSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub hypothesis_samples: usize,
    #[serde(default)]
    pub warm_start: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("all fields defaulted")
    }
}

fn default_max_iters() -> usize {
    SolverConfig::default().max_iters
}

fn default_tol_rel() -> f64 {
    SolverConfig::default().tol_rel
}

fn default_guess() -> InitialGuessSection {
    InitialGuessSection::SineProfile
}

fn default_samples() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "name_certificate")]
    pub certificate: String,
    #[serde(default = "name_trajectory")]
    pub trajectory: String,
    #[serde(default = "name_summary")]
    pub summary: String,
    #[serde(default = "name_report")]
    pub report: String,
    #[serde(default = "name_oracle")]
    pub oracle: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("all fields defaulted")
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn name_certificate() -> String {
    "certificate.json".into()
}

fn name_trajectory() -> String {
    "trajectory.csv".into()
}

fn name_summary() -> String {
    "sweep_summary.csv".into()
}

fn name_report() -> String {
    "hypothesis_report.json".into()
}

fn name_oracle() -> String {
    "oracle_compare.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub domain: DomainSection,
    pub time: TimeSection,
    pub semigroup: SemigroupSection,
    pub nonlinearity: NonlinearitySection,
    pub nonlocal: NonlocalSection,
    #[serde(default)]
    pub certificate: CertificateSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative paths in the document resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Preset documents by name.
pub fn preset(name: &str) -> Option<Value> {
    match name {
        PAPER_EXAMPLE => Some(json!({
            "domain": { "L": "pi", "n": 63 },
            "time": { "m": 64 },
            "semigroup": { "kind": "spectral-heat" },
            "nonlinearity": { "expression": "t*x*(pi - x)*u^2" },
            "nonlocal": {
                "form": "pointwise",
                "alpha": "sin(x)",
                "beta": { "kind": "exp-integral" },
                "sensor_x": "pi/2"
            },
            "certificate": {
                "delta_rho": "zero",
                "eta_rho": "auto-from-alpha",
                "nu_rho": 1.0,
                "t0": 1.0
            },
            "solver": { "rho": 1.0 }
        })),
        _ => None,
    }
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            let replace = matches!((b.get("form"), t.get("form")), (Some(x), Some(y)) if x != y);
            if replace {
                *b = t;
                return;
            }
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, t) => *slot = t,
    }
}

impl ConfigDocument {
    /// Parses a document, expanding its preset if it names one.
    pub fn from_value(mut value: Value) -> Result<Self> {
        let preset_name = match value.as_object_mut().and_then(|o| o.remove("preset")) {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(other) => return Err(Error::schema("preset", format!("expected a string, found {other}"))),
        };
        if let Some(name) = preset_name {
            let mut base =
                preset(&name).ok_or_else(|| Error::schema("preset", format!("unknown preset `{name}`")))?;
            if value.get("nonlinearity").is_some() {
                base.as_object_mut().expect("presets are objects").remove("nonlinearity");
            }
            merge(&mut base, value);
            value = base;
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            let field = e.path().to_string();
            Error::schema(field, e.into_inner().to_string())
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::schema(".", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_value(json!({ "preset": name }))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.domain.length.value("domain.L")?, self.domain.n, self.time.m)
    }

    /// Builds the instance at the document's `solver.rho`.
    pub fn build_instance(&self) -> Result<ProblemInstance> {
        let grid = self.grid()?;
        let rho = self.solver.rho;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::schema("solver.rho", format!("must be positive, got {rho}")));
        }

        let semigroup = match self.semigroup.kind {
            SemigroupKind::SpectralHeat => SemigroupHandle::spectral_heat(grid.length, grid.n)?,
            SemigroupKind::MatrixExpOracle => {
                SemigroupHandle::matrix_exp_oracle_with(grid.length, grid.n, self.semigroup.generator)?
            }
        };

        let nonlinearity = self.build_nonlinearity()?;
        let (nonlocal, alpha) = self.build_nonlocal(&grid)?;
        let certificate = self.build_certificate(&grid, alpha.as_ref(), rho)?;

        Ok(ProblemInstance::new(grid, semigroup, nonlinearity, nonlocal, certificate)?
            .with_mild(MildConfig::new(self.time.quadrature)))
    }

    fn build_nonlinearity(&self) -> Result<Nonlinearity> {
        let s = &self.nonlinearity;
        let set = s.preset.is_some() as u8 + s.expression.is_some() as u8 + s.power_law.is_some() as u8;
        if set != 1 {
            return Err(Error::schema(
                "nonlinearity",
                "exactly one of `preset`, `expression`, `power_law` is required",
            ));
        }
        Ok(match (&s.preset, &s.expression, &s.power_law) {
            (Some(NonlinearityPreset::Zero), ..) => Nonlinearity::Zero,
            (Some(NonlinearityPreset::Linear), ..) => Nonlinearity::Linear,
            (Some(NonlinearityPreset::PaperExample), ..) => Nonlinearity::PowerLaw { c: 1.0, p: 2.0 },
            (_, Some(src), _) => {
                Nonlinearity::Expression(parse("nonlinearity.expression", src, &[Var::T, Var::X, Var::U])?)
            }
            (.., Some(pl)) => Nonlinearity::PowerLaw { c: pl.c, p: pl.p },
            _ => unreachable!("exactly one field is set"),
        })
    }

    fn build_nonlocal(&self, grid: &Grid) -> Result<(NonlocalOperator, Option<GridFunction>)> {
        Ok(match &self.nonlocal {
            NonlocalSection::Pointwise { alpha, beta, sensor_x } => {
                let alpha = sample_x(grid, "nonlocal.alpha", alpha)?;
                let beta = match beta {
                    BetaSection::ExpIntegral => Beta::ExpIntegral,
                    BetaSection::PointEval { t } => Beta::point_eval(grid, *t)?,
                    BetaSection::WeightedIntegral { weights } => {
                        Beta::weighted_integral(grid, sample_t(grid, "nonlocal.beta.weights", weights)?)?
                    }
                };
                let sensor = sensor_x.value("nonlocal.sensor_x")?;
                let op = NonlocalOperator::pointwise(grid, alpha.clone(), beta, sensor)?;
                (op, Some(alpha))
            }
            NonlocalSection::Multipoint { times, coeffs } => (NonlocalOperator::multipoint(grid, times, coeffs)?, None),
            NonlocalSection::Periodic => (NonlocalOperator::Periodic, None),
            NonlocalSection::IntegralAverage { weights } => (
                NonlocalOperator::integral_average(grid, sample_t(grid, "nonlocal.weights", weights)?)?,
                None,
            ),
        })
    }

    fn build_certificate(&self, grid: &Grid, alpha: Option<&GridFunction>, rho: f64) -> Result<CertificateData> {
        let c = &self.certificate;
        let delta = if c.delta_rho == "zero" {
            grid.zero_trajectory()
        } else {
            let e = parse("certificate.delta_rho", &c.delta_rho, &[Var::T, Var::X])?;
            let mut err = None;
            let y = Trajectory::from_fn(grid.m, |t| {
                grid.profile(|x| {
                    e.eval(Bindings { t, x, u: 0.0 }).unwrap_or_else(|ex| {
                        err.get_or_insert(ex);
                        0.0
                    })
                })
                .expect("finite")
            })?;
            if let Some(ex) = err {
                return Err(ex.into());
            }
            y
        };
        let eta = match c.eta_rho.as_str() {
            "zero" => GridFunction::zeros(grid.length, grid.n),
            "auto-from-alpha" => {
                let alpha = alpha.ok_or_else(|| {
                    Error::schema("certificate.eta_rho", "`auto-from-alpha` needs the pointwise nonlocal form")
                })?;
                if !(c.nu_rho >= 0.0) {
                    return Err(Error::Validation(format!("nu_rho must be nonnegative, got {}", c.nu_rho)));
                }
                alpha.scale(c.nu_rho)
            }
            src => sample_x(grid, "certificate.eta_rho", src)?,
        };
        CertificateData::new(grid, delta, eta, c.t0.value("certificate.t0")?, rho)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let initial_guess = match &s.initial_guess {
            InitialGuessSection::SineProfile => InitialGuess::SineProfile,
            InitialGuessSection::RandomCone => InitialGuess::RandomCone { seed: s.seed },
            InitialGuessSection::UserSupplied(path) => InitialGuess::UserSupplied {
                trajectory: read_trajectory_json(&self.base_dir.join(path))?,
            },
        };
        let cfg = SolverConfig {
            max_iters: s.max_iters,
            tol_rel: s.tol_rel,
            damping: s.damping,
            initial_guess,
            hypothesis_samples: s.hypothesis_samples,
            seed: s.seed,
            warm_start: s.warm_start,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.solver.rho_list.clone().unwrap_or_else(|| vec![self.solver.rho])
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.solver.seed = seed;
        self
    }
}

/// Reads and parses a config file. Relative paths inside it resolve against
/// its directory.
pub fn load_config(path: &Path) -> Result<ConfigDocument> {
    let text = std::fs::read_to_string(path)?;
    let mut doc = ConfigDocument::from_json_str(&text)?;
    doc.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(doc)
}

/// A bare trajectory or the `y` of a certificate.
fn read_trajectory_json(path: &Path) -> Result<Trajectory> {
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if value.get("y").is_some() {
        Ok(serde_json::from_value::<EigenpairCertificate>(value)?.y)
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

fn parse(field: &str, src: &str, vars: &[Var]) -> Result<Expression> {
    Expression::parse(src, vars).map_err(|e| Error::schema(field, e.to_string()))
}

fn sample_x(grid: &Grid, field: &str, src: &str) -> Result<GridFunction> {
    let e = parse(field, src, &[Var::X])?;
    let values = (0..grid.n)
        .map(|i| e.eval(Bindings { x: grid.x(i), ..Default::default() }))
        .collect::<Result<Vec<_>, _>>()?;
    GridFunction::new(grid.length, values)
}

fn sample_t(grid: &Grid, field: &str, src: &str) -> Result<Vec<f64>> {
    let e = parse(field, src, &[Var::T])?;
    Ok((0..=grid.m)
        .map(|j| e.eval(Bindings { t: grid.t(j), ..Default::default() }))
        .collect::<Result<Vec<_>, _>>()?)
}
