//! Tail probabilities of `Q = Σⱼ dⱼ χ²₁` for positive weights `dⱼ`.
//!
//! The distribution function is expanded as a nonnegative mixture of central
//! chi-square distribution functions,
//!
//! ```text
//! P(Q ≤ x) = Σₖ cₖ · P(χ²_{n+2k} ≤ x/β),    β = min dⱼ,
//! c₀ = Πⱼ (β/dⱼ)^{1/2},   cₖ = (1/k) Σ_{r<k} g_{k−r} c_r,   gₘ = ½ Σⱼ (1 − β/dⱼ)^m.
//! ```
//!
//! Every `cₖ ≥ 0` and `Σ cₖ = 1`, and `P(χ²_{n+2k} ≤ y)` decreases in `k`, so
//! after `K` terms the neglected part of the distribution function is at most
//! `(1 − Σ_{k≤K} cₖ) · P(χ²_{n+2K+2} ≤ x/β)`. That product is the reported
//! truncation bound.

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::estimate::{Method, TailEstimate};
use crate::special;

pub const DEFAULT_MAX_TERMS: usize = 20_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Term cap and truncation target of the mixture series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub max_terms: usize,
    pub tolerance: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            max_terms: DEFAULT_MAX_TERMS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Positive weights, each carrying one degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareMixture {
    weights: Vec<f64>,
}

impl ChiSquareMixture {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput(
                "chi-square mixture needs at least one weight".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "mixture weight {w} is not positive and finite"
            )));
        }
        Ok(ChiSquareMixture { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `P(Q ≥ x)` with the default series configuration.
    pub fn upper_tail(&self, x: f64) -> Result<TailEstimate> {
        self.upper_tail_with(x, SeriesConfig::default())
    }

    pub fn upper_tail_with(&self, x: f64, cfg: SeriesConfig) -> Result<TailEstimate> {
        RubenSeries::new(self, cfg).upper_tail(x)
    }

    /// `P(Q ≤ x)`.
    pub fn lower_tail(&self, x: f64) -> Result<TailEstimate> {
        let up = self.upper_tail(x)?;
        Ok(TailEstimate {
            value: 1.0 - up.value,
            ..up
        }
        .clamped())
    }
}

/// `P(χ²_df ≤ x)`.
pub fn chi_square_cdf(x: f64, df: u32) -> f64 {
    special::chi_square_cdf(x, df as f64)
}

/// Convenience wrapper: `P(Σ dⱼ χ²₁ ≥ x)`.
pub fn mixture_upper_tail(mix: &ChiSquareMixture, x: f64) -> Result<TailEstimate> {
    mix.upper_tail(x)
}

/// Distribution function, density and truncation bound at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub upper_tail: f64,
    pub density: f64,
    pub bound: f64,
    pub terms: usize,
}

/// Mixture series with its coefficients cached between evaluations.
#[derive(Debug, Clone)]
pub struct RubenSeries {
    beta: f64,
    half_n: f64,
    ratios: Vec<f64>,
    powers: Vec<f64>,
    power_sums: Vec<f64>,
    coeffs: Vec<f64>,
    cumulative: Vec<f64>,
    compensation: f64,
    cfg: SeriesConfig,
}

impl RubenSeries {
    pub fn new(mix: &ChiSquareMixture, cfg: SeriesConfig) -> Self {
        let beta = mix.weights.iter().copied().fold(f64::INFINITY, f64::min);
        let ratios: Vec<f64> = mix
            .weights
            .iter()
            .map(|&d| 1.0 - beta / d)
            .filter(|&a| a > 0.0)
            .collect();
        let c0 = mix
            .weights
            .iter()
            .map(|&d| (beta / d).sqrt())
            .product::<f64>();
        RubenSeries {
            beta,
            half_n: 0.5 * mix.weights.len() as f64,
            powers: ratios.clone(),
            ratios,
            // index 0 unused
            power_sums: vec![0.0],
            coeffs: vec![c0],
            cumulative: vec![c0],
            compensation: 0.0,
            cfg,
        }
    }

    pub fn config(&self) -> SeriesConfig {
        self.cfg
    }

    fn extend_to(&mut self, k: usize) {
        while self.coeffs.len() <= k {
            let m = self.coeffs.len();
            let g = 0.5 * self.powers.iter().sum::<f64>();
            self.power_sums.push(g);
            for (p, a) in self.powers.iter_mut().zip(&self.ratios) {
                *p *= a;
            }
            let mut s = 0.0;
            for r in 0..m {
                s += self.power_sums[m - r] * self.coeffs[r];
            }
            let c = s / m as f64;
            self.coeffs.push(c);
            // compensated running sum; the remaining mass is 1 minus this
            let prev = self.cumulative[m - 1];
            let adj = c - self.compensation;
            let cum = prev + adj;
            self.compensation = (cum - prev) - adj;
            self.cumulative.push(cum);
        }
    }

    /// Mass not yet accounted for after terms `0..=k`.
    fn remaining(&self, k: usize) -> f64 {
        (1.0 - self.cumulative[k]).max(0.0)
    }

    /// Upper tail and density of `Q` at `x`.
    pub fn evaluate(&mut self, x: f64) -> Result<SeriesPoint> {
        if x.is_nan() {
            return Err(Error::InvalidInput("mixture tail evaluated at NaN".into()));
        }
        if x <= 0.0 {
            return Ok(SeriesPoint {
                upper_tail: 1.0,
                density: if x == 0.0 {
                    self.density_at_zero()
                } else {
                    0.0
                },
                bound: 0.0,
                terms: 0,
            });
        }
        if x.is_infinite() {
            return Ok(SeriesPoint {
                upper_tail: 0.0,
                density: 0.0,
                bound: 0.0,
                terms: 0,
            });
        }

        let y = 0.5 * x / self.beta;
        let ln_y = y.ln();
        let tol = self.cfg.tolerance;
        let density_scale = 0.5 / self.beta;

        // P(a + k, y) for a = n/2, stepped with P(a+k+1, y) = P(a+k, y) − e^{−y} y^{a+k} / Γ(a+k+1)
        let mut lower = gamma_lr(self.half_n, y);
        // e^{−y} y^{a+k−1} / Γ(a+k): gamma density of shape a+k at y
        let mut ln_dens = -y + (self.half_n - 1.0) * ln_y - ln_gamma(self.half_n);

        let mut cdf = 0.0;
        let mut dens = 0.0;
        let mut k = 0;
        loop {
            if k >= self.cfg.max_terms {
                let bound = self.remaining(k - 1) * lower;
                return Err(Error::SeriesBudgetExceeded { terms: k, bound });
            }
            self.extend_to(k);
            let c = self.coeffs[k];
            cdf += c * lower;
            dens += c * ln_dens.exp();

            // advance to shape a + k + 1
            let a_k = self.half_n + k as f64;
            ln_dens += ln_y - a_k.ln();
            lower = (lower - ln_dens.exp()).max(0.0);
            k += 1;

            let rem = self.remaining(k - 1);
            let past_mode = a_k + 1.0 > y + 1.0;
            let cdf_bound = rem * lower;
            let dens_bound = rem * ln_dens.exp();
            if cdf_bound <= tol && (rem <= tol || past_mode && dens_bound <= tol) {
                return Ok(SeriesPoint {
                    upper_tail: (1.0 - cdf).clamp(0.0, 1.0),
                    density: dens * density_scale,
                    bound: cdf_bound,
                    terms: k,
                });
            }
        }
    }

    fn density_at_zero(&self) -> f64 {
        match self.half_n {
            h if h < 1.0 => f64::INFINITY,
            1.0 => self.coeffs[0] * 0.5 / self.beta,
            _ => 0.0,
        }
    }

    /// `P(Q ≥ x)`; exactly 1 for `x ≤ 0`.
    pub fn upper_tail(&mut self, x: f64) -> Result<TailEstimate> {
        let p = self.evaluate(x)?;
        Ok(TailEstimate {
            value: p.upper_tail,
            standard_error: p.bound,
            method: Method::RubenSeries,
            evaluations: p.terms as u64,
        })
    }
}
