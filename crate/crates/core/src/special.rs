//! Scalar distribution functions: standard normal and central chi-square.

use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    normal_sf(-x)
}

/// `1 − Φ(x)` without cancellation, via `Q(1/2, x²/2)`.
pub fn normal_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let half_tail = 0.5 * chi_square_sf(x * x, 1.0);
    if x >= 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Regularized lower incomplete gamma `P(df/2, x/2)`.
pub fn chi_square_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    gamma_lr(0.5 * df, 0.5 * x)
}

/// Upper tail `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(0.5 * df, 0.5 * x)
}

/// Chi-square density.
pub fn chi_square_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return match df {
            d if d < 2.0 => f64::INFINITY,
            2.0 => 0.5,
            _ => 0.0,
        };
    }
    let k = 0.5 * df;
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Inverse of [`chi_square_cdf`]: the `x` with `P(χ²_df ≤ x) = p`.
///
/// Newton iterations run on the logarithm of whichever tail is smaller, in
/// the variable `ln x`, and fall back to bisection when a step leaves the
/// current bracket.
pub fn chi_square_quantile(p: f64, df: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let lower = p <= 0.5;
    let target = if lower { p.ln() } else { (1.0 - p).ln() };
    let k = 0.5 * df;

    // residual in t = ln x and its derivative
    let eval = |t: f64| -> (f64, f64) {
        let x = t.exp();
        let tail = if lower {
            chi_square_cdf(x, df)
        } else {
            chi_square_sf(x, df)
        };
        let log_pdf_x = k * (0.5 * x).ln() - 0.5 * x - ln_gamma(k); // ln(x·f(x))
        let ratio = (log_pdf_x - tail.ln()).exp();
        let deriv = if lower { ratio } else { -ratio };
        (tail.ln() - target, deriv)
    };

    let mut t = initial_guess(p, df).ln();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..200 {
        let (r, dr) = eval(t);
        if !r.is_finite() {
            // underflowed tail: move towards the bulk
            if lower {
                lo = t;
                t = if hi.is_finite() {
                    0.5 * (t + hi)
                } else {
                    t + 1.0
                };
            } else {
                hi = t;
                t = if lo.is_finite() {
                    0.5 * (t + lo)
                } else {
                    t - 1.0
                };
            }
            continue;
        }
        let increasing = lower;
        if (r < 0.0) == increasing {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        if r == 0.0 {
            break;
        }
        let mut next = t - r / dr;
        if !next.is_finite() || next <= lo || next >= hi {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                _ => t,
            };
        }
        if (next - t).abs() <= 1e-14 * (1.0 + t.abs()) {
            t = next;
            break;
        }
        t = next;
    }
    t.exp()
}

fn initial_guess(p: f64, df: f64) -> f64 {
    let z = normal_quantile(p);
    let h = 2.0 / (9.0 * df);
    let wh = df * (1.0 - h + z * h.sqrt()).powi(3);
    if wh > 1e-3 * df {
        return wh;
    }
    // small-x power law: P ≈ (x/2)^{k} / Γ(k + 1)
    let k = 0.5 * df;
    2.0 * ((p.ln() + ln_gamma(k + 1.0)) / k).exp()
}
