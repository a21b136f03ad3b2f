//! Black-Scholes sensitivities, the quadratic portfolio model and EWMA covariance.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::special::normal_cdf;

pub const DEFAULT_DAY_COUNT: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionKind::Call),
            "put" | "p" => Ok(OptionKind::Put),
            other => Err(Error::InvalidInput(format!(
                "unknown option kind '{other}', expected call or put"
            ))),
        }
    }
}

impl fmt::Display for OptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        })
    }
}

/// One European option position on a single underlying, plus its share hedge.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    /// Underlying label; positions with the same name share one risk factor.
    pub name: String,
    pub kind: OptionKind,
    pub strike: f64,
    pub rate: f64,
    pub maturity: f64,
    pub spot: f64,
    pub vol: f64,
    /// Signed option count; negative is short.
    pub quantity: f64,
    /// Signed share count; `None` hedges the option delta exactly.
    pub hedge_shares: Option<f64>,
}

impl Instrument {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("strike", self.strike),
            ("spot", self.spot),
            ("maturity", self.maturity),
            ("vol", self.vol),
        ];
        for (field, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{}: {field} must be positive, got {v}",
                    self.name
                )));
            }
        }
        if !self.rate.is_finite() || !self.quantity.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{}: rate and quantity must be finite",
                self.name
            )));
        }
        if let Some(h) = self.hedge_shares {
            if !h.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{}: hedge_shares must be finite",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Shares held against the option: the explicit count, or `−quantity · delta`.
    pub fn effective_hedge(&self) -> f64 {
        self.hedge_shares
            .unwrap_or_else(|| -self.quantity * bs_greeks(self).delta)
    }
}

/// Per-unit Black-Scholes values of a European option.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greeks {
    pub price: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Calendar decay `∂price/∂t` per year.
    pub theta_annual: f64,
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn bs_greeks(inst: &Instrument) -> Greeks {
    let (s, k, r, t, v) = (inst.spot, inst.strike, inst.rate, inst.maturity, inst.vol);
    let sqrt_t = t.sqrt();
    let d1 = ((s / k).ln() + (r + 0.5 * v * v) * t) / (v * sqrt_t);
    let d2 = d1 - v * sqrt_t;
    let disc = k * (-r * t).exp();
    let gamma = normal_pdf(d1) / (s * v * sqrt_t);
    let decay = -s * normal_pdf(d1) * v / (2.0 * sqrt_t);
    match inst.kind {
        OptionKind::Call => Greeks {
            price: s * normal_cdf(d1) - disc * normal_cdf(d2),
            delta: normal_cdf(d1),
            gamma,
            theta_annual: decay - r * disc * normal_cdf(d2),
        },
        OptionKind::Put => Greeks {
            price: disc * normal_cdf(-d2) - s * normal_cdf(-d1),
            delta: -normal_cdf(-d1),
            gamma,
            theta_annual: decay + r * disc * normal_cdf(-d2),
        },
    }
}

/// `√(dayCount · Σᵢᵢ)`: annualized volatility implied by a daily covariance.
pub fn vol_from_sigma(sigma: &SymmetricMatrix, i: usize, day_count: f64) -> f64 {
    (day_count * sigma.get(i, i)).sqrt()
}

/// Second-order profit and loss `Θ + Δ₁ Xᵗ + X Γ₁ Xᵗ/2` in daily log-returns `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub tickers: Vec<String>,
    /// Currency per day.
    pub theta: f64,
    pub delta1: Vec<f64>,
    pub gamma1: SymmetricMatrix,
    pub sigma: SymmetricMatrix,
    /// `Σ |quantity · price| + |hedge · spot|`, the scale of the delta-hedge check.
    pub gross_value: f64,
}

impl QuadraticModel {
    pub fn is_delta_hedged(&self) -> bool {
        let worst = self.delta1.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        worst <= 1e-8 * self.gross_value.max(f64::MIN_POSITIVE)
    }
}

/// Underlying names in first-appearance order.
pub fn underlying_names(instruments: &[Instrument]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for inst in instruments {
        if !names.contains(&inst.name) {
            names.push(inst.name.clone());
        }
    }
    names
}

/// Aggregates positions into the quadratic model.
///
/// Greeks of positions on the same underlying are summed first. With `Sᵢ` the
/// spot, `Δ₁ⁱ = Sᵢ Δⁱ`, `Γ₁ⁱⁱ = Sᵢ² Γⁱⁱ + Δ₁ⁱ` (the second term from
/// `∂²/∂xᵢ² e^{xᵢ}`) and off-diagonal entries vanish for single-name options.
pub fn build_quadratic_model(
    instruments: &[Instrument],
    sigma: &SymmetricMatrix,
    day_count: f64,
) -> Result<QuadraticModel> {
    if !(day_count > 0.0) {
        return Err(Error::InvalidInput(format!(
            "day count must be positive, got {day_count}"
        )));
    }
    let tickers = underlying_names(instruments);
    let n = tickers.len();
    if n == 0 {
        return Err(Error::InvalidInput("no instruments".into()));
    }
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {0}x{0} but instruments reference {n} underlyings",
            sigma.dim()
        )));
    }
    let index: HashMap<&str, usize> = tickers
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut spot = vec![f64::NAN; n];
    let mut delta = vec![0.0; n];
    let mut gamma = vec![0.0; n];
    let mut theta_annual = 0.0;
    let mut gross_value = 0.0;
    for inst in instruments {
        inst.validate()?;
        let i = index[inst.name.as_str()];
        if spot[i].is_nan() {
            spot[i] = inst.spot;
        } else if spot[i] != inst.spot {
            return Err(Error::InvalidInput(format!(
                "{}: inconsistent spots {} and {}",
                inst.name, spot[i], inst.spot
            )));
        }
        let g = bs_greeks(inst);
        let hedge = inst.hedge_shares.unwrap_or(-inst.quantity * g.delta);
        delta[i] += inst.quantity * g.delta + hedge;
        gamma[i] += inst.quantity * g.gamma;
        theta_annual += inst.quantity * g.theta_annual;
        gross_value += (inst.quantity * g.price).abs() + (hedge * inst.spot).abs();
    }
    let delta1: Vec<f64> = (0..n).map(|i| spot[i] * delta[i]).collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| spot[i] * spot[i] * gamma[i] + delta1[i])
        .collect();
    Ok(QuadraticModel {
        tickers,
        theta: theta_annual / day_count,
        delta1,
        gamma1: SymmetricMatrix::from_diagonal(&diag),
        sigma: sigma.clone(),
        gross_value,
    })
}

/// Daily log-returns, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub tickers: Vec<String>,
    pub observations: Vec<Vec<f64>>,
}

impl ReturnSeries {
    pub fn new(tickers: Vec<String>, observations: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.is_empty() {
            return Err(Error::InvalidInput("return series has no tickers".into()));
        }
        if observations.is_empty() {
            return Err(Error::InvalidInput(
                "return series needs at least one observation".into(),
            ));
        }
        for (t, row) in observations.iter().enumerate() {
            if row.len() != tickers.len() {
                return Err(Error::DimensionMismatch(format!(
                    "observation {t} has {} entries for {} tickers",
                    row.len(),
                    tickers.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "observation {t} is not finite"
                )));
            }
        }
        Ok(ReturnSeries {
            tickers,
            observations,
        })
    }

    /// `log(Sₜ/Sₜ₋₁)` for consecutive rows of close prices.
    pub fn from_prices(tickers: Vec<String>, prices: &[Vec<f64>]) -> Result<Self> {
        if prices.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "at least two price rows are needed, got {}",
                prices.len()
            )));
        }
        for (t, row) in prices.iter().enumerate() {
            if row.len() != tickers.len() {
                return Err(Error::DimensionMismatch(format!(
                    "price row {t} has {} entries for {} tickers",
                    row.len(),
                    tickers.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
                return Err(Error::InvalidInput(format!(
                    "price row {t}: prices must be positive, got {p}"
                )));
            }
        }
        let observations = prices
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| (b / a).ln()).collect())
            .collect();
        ReturnSeries::new(tickers, observations)
    }

    pub fn dim(&self) -> usize {
        self.tickers.len()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// `Σ₁ = x₁ᵗx₁`, `Σₜ = λΣₜ₋₁ + (1−λ)xₜᵗxₜ`; returns `Σ_T`.
pub fn ewma_covariance(series: &ReturnSeries, lambda: f64) -> Result<SymmetricMatrix> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!(
            "lambda must lie in [0, 1), got {lambda}"
        )));
    }
    let n = series.dim();
    let mut acc = vec![0.0; n * n];
    for (t, x) in series.observations.iter().enumerate() {
        let (keep, add) = if t == 0 {
            (0.0, 1.0)
        } else {
            (lambda, 1.0 - lambda)
        };
        for i in 0..n {
            for j in 0..=i {
                let v = keep * acc[i * n + j] + add * x[i] * x[j];
                acc[i * n + j] = v;
            }
        }
    }
    let mut out = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            out.set(i, j, acc[i * n + j]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(spot: f64, strike: f64) -> Instrument {
        Instrument {
            name: "X".into(),
            kind: OptionKind::Call,
            strike,
            rate: 0.05,
            maturity: 0.25,
            spot,
            vol: 0.2,
            quantity: 1.0,
            hedge_shares: Some(0.0),
        }
    }

    #[test]
    fn textbook_call_price() {
        // S = K = 100, r = 5%, σ = 20%, T = 1
        let inst = Instrument {
            maturity: 1.0,
            ..call(100.0, 100.0)
        };
        let g = bs_greeks(&inst);
        assert!((g.price - 10.450_583_572_185_565).abs() < 1e-10, "{g:?}");
        assert!((g.delta - 0.636_830_651_175_619).abs() < 1e-10);
    }

    #[test]
    fn deep_in_the_money_delta() {
        let g = bs_greeks(&call(100.0, 1.0));
        assert!((g.delta - 1.0).abs() < 1e-6);
    }

    #[test]
    fn put_call_parity() {
        let c = call(47.0, 50.0);
        let p = Instrument {
            kind: OptionKind::Put,
            ..c.clone()
        };
        let lhs = bs_greeks(&c).price - bs_greeks(&p).price;
        let rhs = c.spot - c.strike * (-c.rate * c.maturity).exp();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn short_hedged_call() {
        let inst = Instrument {
            quantity: -1.0,
            hedge_shares: None,
            ..call(44.26, 39.75)
        };
        let sigma = SymmetricMatrix::from_diagonal(&[4e-4]);
        let m =
            build_quadratic_model(std::slice::from_ref(&inst), &sigma, DEFAULT_DAY_COUNT).unwrap();
        let g = bs_greeks(&inst);
        assert!(m.delta1[0].abs() < 1e-12);
        assert!(m.is_delta_hedged());
        assert!((m.gamma1.get(0, 0) + inst.spot * inst.spot * g.gamma).abs() < 1e-12);
        assert!(m.gamma1.get(0, 0) < 0.0);
        assert!((m.theta + g.theta_annual / 252.0).abs() < 1e-14);
    }

    #[test]
    fn independent_underlyings_have_diagonal_gamma() {
        let a = call(10.0, 11.0);
        let b = Instrument {
            name: "Y".into(),
            ..call(20.0, 19.0)
        };
        let sigma = SymmetricMatrix::identity(2);
        let m = build_quadratic_model(&[a, b], &sigma, 252.0).unwrap();
        assert_eq!(m.gamma1.get(0, 1), 0.0);
        assert!(!m.is_delta_hedged());
    }

    #[test]
    fn dimension_mismatch() {
        let sigma = SymmetricMatrix::identity(2);
        assert!(matches!(
            build_quadratic_model(&[call(1.0, 1.0)], &sigma, 252.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn same_name_positions_aggregate() {
        let a = call(10.0, 11.0);
        let b = Instrument {
            kind: OptionKind::Put,
            ..call(10.0, 9.0)
        };
        let sigma = SymmetricMatrix::identity(1);
        let m = build_quadratic_model(&[a.clone(), b.clone()], &sigma, 252.0).unwrap();
        let gsum = bs_greeks(&a).gamma + bs_greeks(&b).gamma;
        let dsum = bs_greeks(&a).delta + bs_greeks(&b).delta;
        assert!((m.gamma1.get(0, 0) - (100.0 * gsum + 10.0 * dsum)).abs() < 1e-12);
    }

    #[test]
    fn log_returns_and_two_day_series() {
        let s = ReturnSeries::from_prices(
            vec!["A".into(), "B".into()],
            &[vec![1.0, 2.0], vec![2.0, 1.0]],
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.observations[0][0] - 2f64.ln()).abs() < 1e-15);
        let cov = ewma_covariance(&s, 0.94).unwrap();
        assert!((cov.get(0, 1) + 2f64.ln().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn ewma_limits() {
        let s =
            ReturnSeries::new(vec!["A".into()], vec![vec![0.1], vec![0.2], vec![-0.3]]).unwrap();
        assert!((ewma_covariance(&s, 0.0).unwrap().get(0, 0) - 0.09).abs() < 1e-15);
        let z = ReturnSeries::new(vec!["A".into()], vec![vec![0.0]; 4]).unwrap();
        assert_eq!(ewma_covariance(&z, 0.94).unwrap().get(0, 0), 0.0);
        assert!(ewma_covariance(&s, 1.0).is_err());
    }
}
