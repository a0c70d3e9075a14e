//! Positive contraction semigroups generated by the Dirichlet Laplacian on
//! `[0, L]`.
//!
//! Two implementations share one handle type so each can check the other:
//!
//! * [`SemigroupKind::SpectralHeat`] expands a profile in the discrete sine
//!   modes and damps mode `k` by `exp(-(k pi / L)^2 t)`.
//! * [`SemigroupKind::MatrixExpOracle`] multiplies by `exp(t A_h)` computed
//!   with Padé scaling-and-squaring. `A_h` is either the sine-collocation
//!   Laplacian (default; same continuous spectrum) or the three-point
//!   finite-difference Laplacian (`O(h^2)` eigenvalue error).
//!
//! Compactness of the semigroup cannot be observed in finite dimensions.
//! [`SemigroupHandle::mode_amplification`] reports the per-mode damping
//! factors, whose decay in `k` is only a proxy for it.

mod expm;
mod sine;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use expm::{expm, finite_difference_laplacian, sine_collocation_laplacian};

use crate::error::{Error, Result};
use crate::lattice::{norm_sup, GridFunction};
use sine::SineBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemigroupKind {
    SpectralHeat,
    MatrixExpOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleGenerator {
    #[default]
    SineCollocation,
    FiniteDifference,
}

#[derive(Debug)]
enum Engine {
    Spectral(SineBasis),
    Dense {
        generator: DMatrix<f64>,
        // propagators keyed by the bit pattern of t
        cache: Mutex<HashMap<u64, Arc<DMatrix<f64>>>>,
    },
}

/// An evaluatable semigroup `t -> U(t)` together with its growth constants
/// `|U(t)| <= M exp(delta t)` and the bound `D >= sup_{t in [0,1]} |U(t)|`.
#[derive(Debug, Clone)]
pub struct SemigroupHandle {
    kind: SemigroupKind,
    length: f64,
    n: usize,
    growth_m: f64,
    growth_delta: f64,
    bound_d: f64,
    engine: Arc<Engine>,
}

impl SemigroupHandle {
    pub fn spectral_heat(length: f64, n: usize) -> Result<Self> {
        validate_grid(length, n)?;
        let growth_delta = -(std::f64::consts::PI / length).powi(2);
        Ok(SemigroupHandle {
            kind: SemigroupKind::SpectralHeat,
            length,
            n,
            growth_m: 1.0,
            growth_delta,
            bound_d: 1.0,
            engine: Arc::new(Engine::Spectral(SineBasis::new(length, n))),
        })
    }

    pub fn matrix_exp_oracle(length: f64, n: usize) -> Result<Self> {
        Self::matrix_exp_oracle_with(length, n, OracleGenerator::SineCollocation)
    }

    pub fn matrix_exp_oracle_with(length: f64, n: usize, generator: OracleGenerator) -> Result<Self> {
        validate_grid(length, n)?;
        let (matrix, growth_delta) = match generator {
            OracleGenerator::SineCollocation => (
                sine_collocation_laplacian(length, n),
                -(std::f64::consts::PI / length).powi(2),
            ),
            OracleGenerator::FiniteDifference => {
                let h = length / (n as f64 + 1.0);
                let lowest = 4.0 / (h * h) * (std::f64::consts::PI * h / (2.0 * length)).sin().powi(2);
                (finite_difference_laplacian(length, n), -lowest)
            }
        };
        Ok(SemigroupHandle {
            kind: SemigroupKind::MatrixExpOracle,
            length,
            n,
            growth_m: 1.0,
            growth_delta,
            bound_d: 1.0,
            engine: Arc::new(Engine::Dense {
                generator: matrix,
                cache: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn new(kind: SemigroupKind, length: f64, n: usize) -> Result<Self> {
        match kind {
            SemigroupKind::SpectralHeat => Self::spectral_heat(length, n),
            SemigroupKind::MatrixExpOracle => Self::matrix_exp_oracle(length, n),
        }
    }

    pub fn kind(&self) -> SemigroupKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn growth_m(&self) -> f64 {
        self.growth_m
    }

    pub fn growth_delta(&self) -> f64 {
        self.growth_delta
    }

    pub fn bound_d(&self) -> f64 {
        self.bound_d
    }

    /// `M sup_{t in [0,1]} exp(delta t)`.
    pub fn growth_bound(&self) -> f64 {
        self.growth_m * self.growth_delta.exp().max(1.0)
    }

    fn check_input(&self, t: f64, v: &GridFunction) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        if v.n() != self.n || v.length() != self.length {
            return Err(Error::DimensionMismatch(format!(
                "semigroup on (L = {}, n = {}) applied to (L = {}, n = {})",
                self.length,
                self.n,
                v.length(),
                v.n()
            )));
        }
        Ok(())
    }

    /// `U(t) v`. `U(0) v` is `v` itself, bit for bit.
    pub fn apply(&self, t: f64, v: &GridFunction) -> Result<GridFunction> {
        self.check_input(t, v)?;
        if t == 0.0 {
            return Ok(v.clone());
        }
        let values = match &*self.engine {
            Engine::Spectral(basis) => {
                let mut coeffs = basis.forward(v.values());
                for (k, c) in coeffs.iter_mut().enumerate() {
                    *c *= (-basis.decay_rate(k + 1) * t).exp();
                }
                basis.inverse(&coeffs)
            }
            Engine::Dense { .. } => {
                let propagator = self.propagator(t);
                let x = DVector::from_column_slice(v.values());
                (&*propagator * x).as_slice().to_vec()
            }
        };
        GridFunction::new(self.length, values)
    }

    /// Dense `exp(t A_h)`; cached per `t` for the oracle kind.
    fn propagator(&self, t: f64) -> Arc<DMatrix<f64>> {
        let Engine::Dense { generator, cache } = &*self.engine else {
            unreachable!("propagator requested from a spectral semigroup");
        };
        let key = t.to_bits();
        if let Some(p) = cache.lock().expect("propagator cache poisoned").get(&key) {
            return Arc::clone(p);
        }
        let p = Arc::new(expm(&(generator * t)));
        cache
            .lock()
            .expect("propagator cache poisoned")
            .entry(key)
            .or_insert(p)
            .clone()
    }

    /// `|U(t) s_k|_sup / |s_k|_sup` for every sine mode `k = 1..=n`.
    pub fn mode_amplification(&self, t: f64) -> Result<Vec<f64>> {
        (1..=self.n)
            .map(|k| {
                let s = GridFunction::sine_mode(self.length, self.n, k);
                Ok(norm_sup(&self.apply(t, &s)?) / norm_sup(&s))
            })
            .collect()
    }

    /// Runs the semigroup diagnostics with randomness drawn from `check.seed`.
    pub fn check_axioms(&self, check: &AxiomCheck) -> Result<AxiomReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
        let n = self.n;
        let random_signed = |rng: &mut ChaCha8Rng| {
            GridFunction::new(self.length, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        };

        let mut composition_defect: f64 = 0.0;
        let mut linearity_defect: f64 = 0.0;
        let mut identity_exact = true;
        for _ in 0..check.composition_samples.max(1) {
            let t: f64 = rng.random();
            let s: f64 = rng.random();
            let v = random_signed(&mut rng)?;
            let scale = norm_sup(&v).max(f64::MIN_POSITIVE);
            let direct = self.apply(t + s, &v)?;
            let composed = self.apply(t, &self.apply(s, &v)?)?;
            composition_defect = composition_defect.max(norm_sup(&direct.sub(&composed)?) / scale);

            identity_exact &= self.apply(0.0, &v)? == v;

            let w = random_signed(&mut rng)?;
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let mut combo = v.scale(a);
            combo.axpy(b, &w)?;
            let lhs = self.apply(t, &combo)?;
            let mut rhs = self.apply(t, &v)?.scale(a);
            rhs.axpy(b, &self.apply(t, &w)?)?;
            let denom = norm_sup(&lhs).max(norm_sup(&v).max(norm_sup(&w)) * a.abs().max(b.abs()));
            linearity_defect = linearity_defect.max(norm_sup(&lhs.sub(&rhs)?) / denom.max(f64::MIN_POSITIVE));
        }

        let mut positivity_violation: f64 = 0.0;
        for sample in 0..check.positivity_samples {
            // alternate dense random vectors with single spikes, the latter
            // probe the kernel directly
            let v = if sample % 2 == 0 {
                GridFunction::new(self.length, (0..n).map(|_| rng.random::<f64>()).collect())?
            } else {
                let mut values = vec![0.0; n];
                values[rng.random_range(0..n)] = 1.0;
                GridFunction::new(self.length, values)?
            };
            let scale = norm_sup(&v).max(f64::MIN_POSITIVE);
            for &t in &check.positivity_times {
                let w = self.apply(t, &v)?;
                positivity_violation = positivity_violation.max((-w.min_value()).max(0.0) / scale);
            }
        }

        // smooth random profiles: a few low modes with random amplitudes
        let mut continuity_modulus = Vec::new();
        let smooth: Vec<GridFunction> = (0..4)
            .map(|_| {
                let mut v = GridFunction::zeros(self.length, n);
                for k in 1..=n.min(8) {
                    v.axpy(rng.random_range(-1.0..1.0) / (k * k) as f64, &GridFunction::sine_mode(self.length, n, k))
                        .expect("same grid");
                }
                v
            })
            .collect();
        for t in [1e-1, 1e-2, 1e-3, 1e-4] {
            let mut worst: f64 = 0.0;
            for v in &smooth {
                let d = self.apply(t, v)?.sub(v)?;
                worst = worst.max(norm_sup(&d) / norm_sup(v).max(f64::MIN_POSITIVE));
            }
            continuity_modulus.push((t, worst));
        }

        let amplification = self.mode_amplification(0.1)?;
        let compactness_proxy = amplification.last().copied().unwrap_or(0.0) / amplification[0];

        let passed =
            composition_defect <= check.tol && identity_exact && positivity_violation <= check.tol;
        Ok(AxiomReport {
            composition_defect,
            identity_exact,
            positivity_violation,
            linearity_defect,
            continuity_modulus,
            compactness_proxy,
            passed,
        })
    }

    /// Sampled estimate of `sup_{t in [0,1]} |U(t)|` in the sup-norm operator
    /// norm. Samples `t = j / samples` for `j = 0..=samples` against the
    /// all-ones vector (exact for positive operators) and random sign vectors.
    /// Raises the stored `D` if the estimate exceeds it.
    pub fn estimate_d(&mut self, samples: usize, seed: u64) -> Result<f64> {
        let samples = samples.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probes = vec![GridFunction::new(self.length, vec![1.0; self.n])?];
        for _ in 0..samples {
            let values = (0..self.n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            probes.push(GridFunction::new(self.length, values)?);
        }
        let mut estimate: f64 = 0.0;
        for j in 0..=samples {
            let t = j as f64 / samples as f64;
            for v in &probes {
                estimate = estimate.max(norm_sup(&self.apply(t, v)?));
            }
        }
        if estimate > self.bound_d {
            self.bound_d = estimate;
        }
        Ok(estimate)
    }
}

fn validate_grid(length: f64, n: usize) -> Result<()> {
    if !(length.is_finite() && length > 0.0) || n == 0 {
        return Err(Error::InvalidGrid(format!("need L > 0 and n > 0, got L = {length}, n = {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomCheck {
    pub composition_samples: usize,
    pub positivity_samples: usize,
    pub positivity_times: Vec<f64>,
    pub tol: f64,
    pub seed: u64,
}

impl Default for AxiomCheck {
    fn default() -> Self {
        AxiomCheck {
            composition_samples: 200,
            positivity_samples: 1000,
            positivity_times: vec![0.01, 0.1, 1.0],
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// Worst `|U(t+s)v - U(t)U(s)v| / |v|`.
    pub composition_defect: f64,
    pub identity_exact: bool,
    /// Worst `max(0, -min U(t)v) / |v|` over nonnegative `v`.
    pub positivity_violation: f64,
    pub linearity_defect: f64,
    /// `(t, worst |U(t)v - v| / |v|)` for decreasing `t` on smooth `v`.
    pub continuity_modulus: Vec<(f64, f64)>,
    /// Damping of the highest mode relative to the lowest at `t = 0.1`.
    pub compactness_proxy: f64,
    pub passed: bool,
}
