use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::rng::{replicate_stream, Purpose};
use super::{replicate_mean_and_se, McConfig};
use crate::chi2mix::{ChiSquareMixture, RubenSeries, SeriesConfig};
use crate::error::{Error, Result};
use crate::estimate::{Method, TailEstimate};
use crate::linalg::SignedSpectrum;
use crate::special;

/// Interpolation error budget of the tabulated inner tail.
const TABLE_TOLERANCE: f64 = 2e-11;
const TABLE_MIN_NODES: usize = 512;
const TABLE_MAX_NODES: usize = 1 << 15;
/// Beyond the last node the inner tail is below this and is returned as 0.
const TABLE_TAIL_CUTOFF: f64 = 1e-12;
/// Series truncation target while building the table.
const TABLE_SERIES_TOLERANCE: f64 = 1e-14;

/// `H(R² + r²) = P(Σ d⁻ⱼ χ²₁ ≥ R² + r²)`, evaluated from the mixture series.
pub fn inner_tail_h(r2sum: f64, d_minus: &[f64]) -> Result<TailEstimate> {
    ChiSquareMixture::new(d_minus.to_vec())?.upper_tail(r2sum)
}

/// `G(R)` for `n₊ = 0`: `P(Σ d⁻ⱼ χ²₁ ≥ R²)`.
pub fn g_normal_neg_only(r: f64, d_minus: &[f64]) -> Result<TailEstimate> {
    check_radius(r)?;
    Ok(inner_tail_h(r * r, d_minus)?.with_method(Method::NegOnly))
}

/// `G(R)` for `n₋ = 0`: `P(Σ d⁺ⱼ χ²₁ ≤ R²)`, where `R² = −2(V + Θ)`.
pub fn g_normal_pos_only(r: f64, d_plus: &[f64]) -> Result<TailEstimate> {
    check_radius(r)?;
    let up = ChiSquareMixture::new(d_plus.to_vec())?.upper_tail(r * r)?;
    Ok(TailEstimate {
        value: 1.0 - up.value,
        method: Method::PosOnly,
        ..up
    }
    .clamped())
}

/// `G(R)` for a mixed signature: `E_z[H(R² + z D₊ zᵗ)]` with `z ~ N(0, I_{n₊})`.
pub fn g_normal_mixed(r: f64, spectrum: &SignedSpectrum, cfg: McConfig) -> Result<TailEstimate> {
    check_radius(r)?;
    Ok(MixedSampler::new(spectrum, cfg)?.evaluate(r))
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "hyperboloid radius must be finite and nonnegative, got {r}"
        )))
    }
}

/// The inner tail `x ↦ H(x)` for a fixed set of negative weights, with an
/// optional piecewise cubic Hermite table on `s = √x`.
///
/// `H(s²)` is smooth in `s` for every number of weights, including the
/// square-root behaviour at the origin for one or two weights, which is why
/// the table lives on the `s` axis. Slopes come from the mixture density.
#[derive(Debug, Clone)]
pub struct InnerTailTable {
    series: RubenSeries,
    table: Option<Table>,
}

#[derive(Debug, Clone)]
struct Table {
    step: f64,
    inv_step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    max_error: f64,
}

impl InnerTailTable {
    pub fn new(d_minus: &[f64]) -> Result<Self> {
        let mix = ChiSquareMixture::new(d_minus.to_vec())?;
        let mut t = InnerTailTable {
            series: RubenSeries::new(
                &mix,
                SeriesConfig {
                    tolerance: TABLE_SERIES_TOLERANCE,
                    ..SeriesConfig::default()
                },
            ),
            table: None,
        };
        let n_minus = d_minus.len();
        let weight_sum: f64 = d_minus.iter().sum();

        let mut s_max = 2.0 * weight_sum.sqrt();
        let mut grow = 0;
        while t.series.evaluate(s_max * s_max)?.upper_tail > TABLE_TAIL_CUTOFF {
            s_max *= 1.5;
            grow += 1;
            if grow > 100 {
                return Err(Error::Internal("inner tail does not decay".into()));
            }
        }

        let slope_at_zero = if n_minus == 1 {
            -(2.0 / (std::f64::consts::PI * d_minus[0])).sqrt()
        } else {
            0.0
        };

        let mut nodes = TABLE_MIN_NODES;
        loop {
            let step = s_max / nodes as f64;
            let mut values = Vec::with_capacity(nodes + 1);
            let mut slopes = Vec::with_capacity(nodes + 1);
            for i in 0..=nodes {
                let s = i as f64 * step;
                let p = t.series.evaluate(s * s)?;
                values.push(p.upper_tail);
                slopes.push(if i == 0 {
                    slope_at_zero
                } else {
                    -2.0 * s * p.density
                });
            }
            let mut table = Table {
                step,
                inv_step: 1.0 / step,
                values,
                slopes,
                max_error: 0.0,
            };
            let mut max_error: f64 = 0.0;
            for i in 0..nodes {
                let s = (i as f64 + 0.5) * step;
                let exact = t.series.evaluate(s * s)?.upper_tail;
                max_error = max_error.max((table.interpolate(s) - exact).abs());
            }
            table.max_error = max_error;
            if max_error <= TABLE_TOLERANCE || nodes >= TABLE_MAX_NODES {
                t.table = Some(table);
                return Ok(t);
            }
            nodes *= 2;
        }
    }

    /// Series-only evaluator without a table.
    pub fn exact_only(d_minus: &[f64]) -> Result<Self> {
        let mix = ChiSquareMixture::new(d_minus.to_vec())?;
        Ok(InnerTailTable {
            series: RubenSeries::new(&mix, SeriesConfig::default()),
            table: None,
        })
    }

    pub fn exact(&mut self, x: f64) -> Result<TailEstimate> {
        self.series.upper_tail(x)
    }

    /// Largest interpolation error observed at interval midpoints.
    pub fn max_error(&self) -> Option<f64> {
        self.table.as_ref().map(|t| t.max_error)
    }

    /// Tabulated `H(x)` for `x ≥ 0`. Panics when built with [`Self::exact_only`].
    #[inline]
    pub fn interpolate(&self, x: f64) -> f64 {
        self.table
            .as_ref()
            .expect("inner tail table was built without interpolation nodes")
            .interpolate(x.max(0.0).sqrt())
    }
}

impl Table {
    #[inline]
    fn interpolate(&self, s: f64) -> f64 {
        let pos = s * self.inv_step;
        let i = pos as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let t = pos - i as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.values[i]
            + h10 * self.step * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * self.step * self.slopes[i + 1];
        v.clamp(0.0, 1.0)
    }
}

/// Spherical-radial sample of `r² = ρ² · ξ D₊ ξᵗ` shared across evaluations.
///
/// Directions are normalized Gaussian vectors and radii follow the chi law
/// with `n₊` degrees of freedom. With antithetic sampling each draw `(ρ, ξ)`
/// is paired with `(ρ', Pξ)`: `ρ'² = F⁻¹(1 − F(ρ²))` is the radial quantile
/// complement and `P` reverses the coordinates of `ξ` against the ascending
/// weights. Both maps preserve their laws, and both push `ρ² ξ D₊ ξᵗ` the
/// other way. (`ξ ↦ −ξ` would leave the quadratic form unchanged.)
#[derive(Debug, Clone)]
pub struct MixedSampler {
    inner: InnerTailTable,
    replicates: Vec<Vec<f64>>,
    evaluations: u64,
}

impl MixedSampler {
    pub fn new(spectrum: &SignedSpectrum, cfg: McConfig) -> Result<Self> {
        cfg.validate()?;
        if spectrum.d_plus.is_empty() || spectrum.d_minus.is_empty() {
            return Err(Error::InvalidSignature(format!(
                "mixed route needs both signs, got n_plus = {}, n_minus = {}",
                spectrum.n_plus(),
                spectrum.n_minus()
            )));
        }
        let inner = InnerTailTable::new(&spectrum.d_minus)?;
        let d_plus = &spectrum.d_plus;
        let replicates: Vec<Vec<f64>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| sample_r2(d_plus, cfg, rep))
            .collect();
        Ok(MixedSampler {
            inner,
            replicates,
            evaluations: cfg.total_samples(),
        })
    }

    pub fn inner(&self) -> &InnerTailTable {
        &self.inner
    }

    pub fn evaluate(&self, r: f64) -> TailEstimate {
        let r2 = r * r;
        let means: Vec<f64> = self
            .replicates
            .par_iter()
            .map(|sample| {
                sample
                    .iter()
                    .map(|&q| self.inner.interpolate(r2 + q))
                    .sum::<f64>()
                    / sample.len() as f64
            })
            .collect();
        let (value, se) = replicate_mean_and_se(&means);
        TailEstimate {
            value,
            standard_error: se,
            method: Method::Mixed,
            evaluations: self.evaluations,
        }
        .clamped()
    }
}

fn sample_r2(d_plus: &[f64], cfg: McConfig, replicate: usize) -> Vec<f64> {
    let mut rng = replicate_stream(cfg.seed, Purpose::Mixed, replicate);
    let n = cfg.samples_per_replicate;
    let df = d_plus.len() as f64;
    let mut out = Vec::with_capacity(n);
    let mut z2 = vec![0.0; d_plus.len()];
    if cfg.antithetic {
        while out.len() + 2 <= n {
            for v in z2.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v = z * z;
            }
            let rho2: f64 = z2.iter().sum();
            let form: f64 = d_plus.iter().zip(&z2).map(|(d, v)| d * v).sum();
            out.push(form);
            if rho2 > 0.0 {
                // weights ascend, so the reversed direction puts the large components on the small weights
                let reversed: f64 = d_plus.iter().rev().zip(&z2).map(|(d, v)| d * v).sum();
                let complement = special::chi_square_quantile(special::chi_square_sf(rho2, df), df);
                out.push(reversed / rho2 * complement);
            } else {
                out.push(form);
            }
        }
    }
    while out.len() < n {
        let form: f64 = d_plus
            .iter()
            .map(|d| {
                let z: f64 = rng.sample(StandardNormal);
                d * z * z
            })
            .sum();
        out.push(form);
    }
    out
}
