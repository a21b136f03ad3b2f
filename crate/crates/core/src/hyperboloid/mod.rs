//! Mass of an elliptic distribution over the hyperboloid
//! `{w = (w₊, w₋) : |w₋|² − |w₊|² ≥ R²}` with covariance `diag(D₊, D₋)`.
//!
//! Under the Normal density the three signatures are handled separately:
//! only negative weights reduce to an upper chi-square-mixture tail, only
//! positive weights to a lower tail, and the mixed case integrates the
//! inner tail `H(R² + r²)` against the positive part by spherical-radial
//! sampling. [`g_general_elliptic`] evaluates the double spherical-radial
//! form for an arbitrary radial density, and [`mc_oracle`] samples the event
//! directly.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::estimate::{Method, TailEstimate};
use crate::linalg::SignedSpectrum;

mod elliptic;
mod normal;
mod oracle;
pub mod quadrature;
pub mod rng;
pub mod sphere;

pub use elliptic::{g_general_elliptic, QuadConfig};
pub use normal::{
    g_normal_mixed, g_normal_neg_only, g_normal_pos_only, inner_tail_h, InnerTailTable,
    MixedSampler,
};
pub use oracle::{mc_oracle, OracleSampler};

/// Default number of independent replicates.
pub const DEFAULT_REPLICATES: usize = 32;
/// Default samples per replicate; 32 × 100 000 = 3.2 × 10⁶ per evaluation.
pub const DEFAULT_SAMPLES_PER_REPLICATE: usize = 100_000;

/// Sampling configuration shared by the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub seed: u64,
    pub replicates: usize,
    pub samples_per_replicate: usize,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(
        seed: u64,
        replicates: usize,
        samples_per_replicate: usize,
        antithetic: bool,
    ) -> Result<Self> {
        let cfg = McConfig {
            seed,
            replicates,
            samples_per_replicate,
            antithetic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidInput(
                "at least two replicates are needed for a standard error".into(),
            ));
        }
        if self.samples_per_replicate == 0 {
            return Err(Error::InvalidInput(
                "samples per replicate must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn total_samples(&self) -> u64 {
        self.replicates as u64 * self.samples_per_replicate as u64
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 42,
            replicates: DEFAULT_REPLICATES,
            samples_per_replicate: DEFAULT_SAMPLES_PER_REPLICATE,
            antithetic: true,
        }
    }
}

/// A radial law `u ↦ g(|u|²)` on `ℝⁿ` for a custom elliptic distribution.
pub trait RadialLaw: Send + Sync {
    /// Density generator, normalized so that `∫_{ℝ^dim} g(|u|²) du = 1`.
    fn generator(&self, s: f64, dim: usize) -> f64;

    /// Draws `|u|` for `u` distributed with density `g(|u|²)` in `ℝ^dim`.
    fn sample_radius(&self, rng: &mut dyn RngCore, dim: usize) -> f64;
}

/// Spherical density of the standardized returns.
#[derive(Clone)]
pub enum RadialDensity {
    Normal,
    Custom(Arc<dyn RadialLaw>),
}

impl RadialDensity {
    pub fn generator(&self, s: f64, dim: usize) -> f64 {
        match self {
            RadialDensity::Normal => normal_generator(s, dim),
            RadialDensity::Custom(law) => law.generator(s, dim),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            RadialDensity::Normal => "normal",
            RadialDensity::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `(2π)^{−n/2} e^{−s/2}`.
pub fn normal_generator(s: f64, dim: usize) -> f64 {
    (-0.5 * s - 0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln()).exp()
}

/// Which of the three Normal-case routes applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    /// `n₊ = 0`.
    NegOnly,
    /// `n₋ = 0`.
    PosOnly,
    Mixed,
}

impl Signature {
    pub fn of(spectrum: &SignedSpectrum) -> Result<Self> {
        match (spectrum.n_plus(), spectrum.n_minus()) {
            (0, 0) => Err(Error::AllZeroSpectrum),
            (0, _) => Ok(Signature::NegOnly),
            (_, 0) => Ok(Signature::PosOnly),
            _ => Ok(Signature::Mixed),
        }
    }

    pub fn method(self) -> Method {
        match self {
            Signature::NegOnly => Method::NegOnly,
            Signature::PosOnly => Method::PosOnly,
            Signature::Mixed => Method::Mixed,
        }
    }
}

/// Spectrum plus density: the region and law of the hyperboloid integral.
#[derive(Debug, Clone)]
pub struct HyperboloidProblem {
    pub spectrum: SignedSpectrum,
    pub density: RadialDensity,
}

impl HyperboloidProblem {
    pub fn new(spectrum: SignedSpectrum, density: RadialDensity) -> Result<Self> {
        if spectrum.n_plus() + spectrum.n_minus() == 0 {
            return Err(Error::AllZeroSpectrum);
        }
        Ok(HyperboloidProblem { spectrum, density })
    }

    pub fn normal(spectrum: SignedSpectrum) -> Result<Self> {
        Self::new(spectrum, RadialDensity::Normal)
    }

    pub fn signature(&self) -> Result<Signature> {
        Signature::of(&self.spectrum)
    }
}

/// Route override; `Auto` follows the signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    NegOnly,
    PosOnly,
    Mixed,
    General,
    Oracle,
}

impl MethodChoice {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => MethodChoice::Auto,
            "neg-only" => MethodChoice::NegOnly,
            "pos-only" => MethodChoice::PosOnly,
            "mixed" => MethodChoice::Mixed,
            "general" => MethodChoice::General,
            "oracle" => MethodChoice::Oracle,
            other => return Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        })
    }

    /// Concrete route for `problem`; fails when the route does not fit the signature.
    pub fn resolve(self, problem: &HyperboloidProblem) -> Result<Method> {
        let sig = problem.signature()?;
        let normal = matches!(problem.density, RadialDensity::Normal);
        let need_normal = |m: Method| {
            if normal {
                Ok(m)
            } else {
                Err(Error::InvalidInput(format!(
                    "method {m} requires the normal density; use general or oracle"
                )))
            }
        };
        match self {
            MethodChoice::Auto if normal => Ok(sig.method()),
            MethodChoice::Auto => match sig {
                Signature::Mixed => Ok(Method::General),
                _ => Ok(Method::Oracle),
            },
            MethodChoice::NegOnly if sig == Signature::NegOnly => need_normal(Method::NegOnly),
            MethodChoice::PosOnly if sig == Signature::PosOnly => need_normal(Method::PosOnly),
            MethodChoice::Mixed if sig == Signature::Mixed => need_normal(Method::Mixed),
            MethodChoice::General if sig == Signature::Mixed => Ok(Method::General),
            MethodChoice::Oracle => Ok(Method::Oracle),
            other => Err(Error::InvalidSignature(format!(
                "method {other:?} does not apply to a spectrum with n_plus = {}, n_minus = {}",
                problem.spectrum.n_plus(),
                problem.spectrum.n_minus()
            ))),
        }
    }
}

/// Prepared evaluator of `R ↦ G(R)` for one problem and route.
///
/// Sampling routes draw their random numbers once at construction, so every
/// call sees the same sample (common random numbers) and `G` is a
/// deterministic nonincreasing function of `R`. For [`Method::PosOnly`] the
/// evaluated quantity is the lower tail `P(|w₊|² ≤ R²)`, which increases in `R`.
#[derive(Debug, Clone)]
pub enum GEvaluator {
    NegOnly(InnerTailTable),
    PosOnly(crate::chi2mix::RubenSeries),
    Mixed(MixedSampler),
    General {
        spectrum: SignedSpectrum,
        density: RadialDensity,
        cfg: QuadConfig,
    },
    Oracle(OracleSampler),
}

impl GEvaluator {
    pub fn new(problem: &HyperboloidProblem, method: Method, mc: McConfig) -> Result<Self> {
        let spectrum = &problem.spectrum;
        let sig = problem.signature()?;
        Ok(match method {
            Method::NegOnly | Method::RubenSeries => {
                if sig != Signature::NegOnly {
                    return Err(Error::InvalidSignature(
                        "neg-only route needs n_plus = 0".into(),
                    ));
                }
                GEvaluator::NegOnly(InnerTailTable::exact_only(&spectrum.d_minus)?)
            }
            Method::PosOnly => {
                if sig != Signature::PosOnly {
                    return Err(Error::InvalidSignature(
                        "pos-only route needs n_minus = 0".into(),
                    ));
                }
                let mix = crate::chi2mix::ChiSquareMixture::new(spectrum.d_plus.clone())?;
                GEvaluator::PosOnly(crate::chi2mix::RubenSeries::new(&mix, Default::default()))
            }
            Method::Mixed => GEvaluator::Mixed(MixedSampler::new(spectrum, mc)?),
            Method::General => {
                if sig != Signature::Mixed {
                    return Err(Error::InvalidSignature(
                        "general route needs both n_plus and n_minus > 0".into(),
                    ));
                }
                GEvaluator::General {
                    spectrum: spectrum.clone(),
                    density: problem.density.clone(),
                    cfg: QuadConfig::from_mc(mc),
                }
            }
            Method::Oracle => {
                GEvaluator::Oracle(OracleSampler::new(spectrum, &problem.density, mc)?)
            }
        })
    }

    pub fn method(&self) -> Method {
        match self {
            GEvaluator::NegOnly(_) => Method::NegOnly,
            GEvaluator::PosOnly(_) => Method::PosOnly,
            GEvaluator::Mixed(_) => Method::Mixed,
            GEvaluator::General { .. } => Method::General,
            GEvaluator::Oracle(_) => Method::Oracle,
        }
    }

    pub fn evaluate(&mut self, r: f64) -> Result<TailEstimate> {
        if !(r >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "hyperboloid radius must be nonnegative, got {r}"
            )));
        }
        let est = match self {
            GEvaluator::NegOnly(table) => table.exact(r * r)?.with_method(Method::NegOnly),
            GEvaluator::PosOnly(series) => {
                let up = series.upper_tail(r * r)?;
                TailEstimate {
                    value: 1.0 - up.value,
                    method: Method::PosOnly,
                    ..up
                }
                .clamped()
            }
            GEvaluator::Mixed(sampler) => sampler.evaluate(r),
            GEvaluator::General {
                spectrum,
                density,
                cfg,
            } => g_general_elliptic(r, spectrum, density, cfg)?,
            GEvaluator::Oracle(sampler) => sampler.evaluate(r),
        };
        Ok(est)
    }
}

/// Standard error of the mean of replicate estimates.
pub(crate) fn replicate_mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}
