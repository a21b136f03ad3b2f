//! Inversion of `G(R) = α` and the Value-at-Risk conversion `V = R²/2 − Θ`.

use crate::error::{Error, Result};
use crate::estimate::{Method, TailEstimate};
use crate::hyperboloid::{GEvaluator, HyperboloidProblem, McConfig};

/// Upper end of the bracket search.
pub const MAX_BRACKET: f64 = 1e6;
const MAX_ITERATIONS: usize = 200;

/// Acceptance rule for `|G(R) − α|`: below `max(abs, se_multiple · SE(R))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveTolerance {
    pub abs: f64,
    pub se_multiple: f64,
}

impl SolveTolerance {
    /// `1e-4` on the probability scale.
    pub const DETERMINISTIC: SolveTolerance = SolveTolerance {
        abs: 1e-4,
        se_multiple: 0.0,
    };
    /// `max(1e-4, SE/2)`.
    pub const MONTE_CARLO: SolveTolerance = SolveTolerance {
        abs: 1e-4,
        se_multiple: 0.5,
    };

    pub fn fixed(abs: f64) -> Self {
        SolveTolerance {
            abs,
            se_multiple: 0.0,
        }
    }

    pub fn for_method(method: Method) -> Self {
        if method.is_deterministic() {
            Self::DETERMINISTIC
        } else {
            Self::MONTE_CARLO
        }
    }

    fn accepts(&self, est: &TailEstimate, alpha: f64) -> bool {
        (est.value - alpha).abs() <= self.abs.max(self.se_multiple * est.standard_error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSolution {
    pub r: f64,
    pub g_at_r: TailEstimate,
    pub iterations: usize,
}

/// Solves `g(R) = α` for a nonincreasing `g` with `g(0) ≥ α`.
///
/// The bracket `[lo, hi]` starts at `[0, 1]` and doubles until `g(hi) < α`;
/// Brent's method (inverse quadratic interpolation with bisection
/// safeguards) then shrinks it until `g` is within tolerance of `α`.
pub fn solve_r(
    alpha: f64,
    mut g: impl FnMut(f64) -> Result<TailEstimate>,
    tol: SolveTolerance,
) -> Result<RootSolution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let mut iterations = 0;
    let mut eval = |r: f64, iterations: &mut usize| -> Result<TailEstimate> {
        *iterations += 1;
        g(r)
    };

    let g0 = eval(0.0, &mut iterations)?;
    if tol.accepts(&g0, alpha) {
        return Ok(RootSolution {
            r: 0.0,
            g_at_r: g0,
            iterations,
        });
    }
    if g0.value < alpha {
        return Err(Error::NoSolution {
            alpha,
            g0: g0.value,
        });
    }

    let mut lo = 0.0;
    let mut g_lo = g0;
    let mut hi = 1.0;
    let mut g_hi = eval(hi, &mut iterations)?;
    while g_hi.value >= alpha {
        if tol.accepts(&g_hi, alpha) {
            return Ok(RootSolution {
                r: hi,
                g_at_r: g_hi,
                iterations,
            });
        }
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        if hi > MAX_BRACKET {
            return Err(Error::BracketOverflow {
                alpha,
                hi,
                g_hi: g_hi.value,
            });
        }
        g_hi = eval(hi, &mut iterations)?;
    }

    // Brent on f(R) = g(R) − α with f(a) > 0 > f(b)
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (g_lo.value - alpha, g_hi.value - alpha);
    let mut est_b = g_hi;
    let mut est_a = g_lo;
    let (mut c, mut fc, mut est_c) = (a, fa, est_a);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            est_c = est_a;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
            est_a = est_b;
            est_b = est_c;
            est_c = est_a;
        }
        if tol.accepts(&est_b, alpha) {
            return Ok(RootSolution {
                r: b,
                g_at_r: est_b,
                iterations,
            });
        }
        let x_tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if m.abs() <= x_tol {
            return Err(Error::SolverStalled {
                r: b,
                residual: fb.abs(),
                tol: tol.abs,
            });
        }
        if e.abs() >= x_tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (x_tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        est_a = est_b;
        b += if d.abs() > x_tol {
            d
        } else {
            x_tol.copysign(m)
        };
        est_b = eval(b, &mut iterations)?;
        fb = est_b.value - alpha;
    }
    Err(Error::SolverStalled {
        r: b,
        residual: fb.abs(),
        tol: tol.abs,
    })
}

/// `V = R²/2 − Θ`.
pub fn var_from_r(r: f64, theta: f64) -> f64 {
    r * r / 2.0 - theta
}

/// Positive-only signature, where `R² = −2(V + Θ)`: `V = −R²/2 − Θ`.
pub fn var_from_r_pos_only(r: f64, theta: f64) -> f64 {
    -r * r / 2.0 - theta
}

/// One solved confidence level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarResult {
    pub alpha: f64,
    pub r: f64,
    pub v: f64,
    pub g_at_r: f64,
    pub standard_error: f64,
    pub iterations: usize,
    pub method: Method,
}

impl VarResult {
    /// Recomputes `V` from `R` and `Θ` with the convention of `method`.
    pub fn var_identity(method: Method, r: f64, theta: f64) -> f64 {
        if method == Method::PosOnly {
            var_from_r_pos_only(r, theta)
        } else {
            var_from_r(r, theta)
        }
    }
}

/// Solves `G(R) = α` for one level on a prepared evaluator.
///
/// On the positive-only route `G` is the lower tail `P(|w₊|² ≤ R²)`, which
/// increases in `R`; the solve runs on its complement.
pub fn solve_var_with(
    evaluator: &mut GEvaluator,
    alpha: f64,
    theta: f64,
    tol: SolveTolerance,
) -> Result<VarResult> {
    let method = evaluator.method();
    let (sol, g_at_r) = if method == Method::PosOnly {
        let sol = solve_r(
            1.0 - alpha,
            |r| {
                let est = evaluator.evaluate(r)?;
                Ok(TailEstimate {
                    value: 1.0 - est.value,
                    ..est
                })
            },
            tol,
        )?;
        (sol, 1.0 - sol.g_at_r.value)
    } else {
        let sol = solve_r(alpha, |r| evaluator.evaluate(r), tol)?;
        (sol, sol.g_at_r.value)
    };
    Ok(VarResult {
        alpha,
        r: sol.r,
        v: VarResult::var_identity(method, sol.r, theta),
        g_at_r,
        standard_error: sol.g_at_r.standard_error,
        iterations: sol.iterations,
        method,
    })
}

/// Builds the evaluator for `method` and solves one level.
pub fn solve_var(
    problem: &HyperboloidProblem,
    method: Method,
    alpha: f64,
    theta: f64,
    mc: McConfig,
) -> Result<VarResult> {
    let mut evaluator = GEvaluator::new(problem, method, mc)?;
    solve_var_with(
        &mut evaluator,
        alpha,
        theta,
        SolveTolerance::for_method(method),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_sf;

    fn two_sided(r: f64) -> Result<TailEstimate> {
        Ok(TailEstimate::exact(2.0 * normal_sf(r), Method::NegOnly))
    }

    #[test]
    fn normal_quantile_identity() {
        let sol = solve_r(0.05, two_sided, SolveTolerance::fixed(1e-12)).unwrap();
        assert!((sol.r - 1.959_963_984_540_054).abs() < 1e-9, "{sol:?}");
        let sol = solve_r(0.05, two_sided, SolveTolerance::DETERMINISTIC).unwrap();
        assert!((sol.g_at_r.value - 0.05).abs() <= 1e-4);
        assert!((sol.r - 1.959_964).abs() < 2e-3);
    }

    #[test]
    fn no_solution_when_mass_too_small() {
        let g = |_r: f64| Ok(TailEstimate::exact(0.01, Method::Mixed));
        assert!(matches!(
            solve_r(0.05, g, SolveTolerance::DETERMINISTIC),
            Err(Error::NoSolution { .. })
        ));
    }

    #[test]
    fn bracket_overflow() {
        let g = |_r: f64| Ok(TailEstimate::exact(0.5, Method::Mixed));
        assert!(matches!(
            solve_r(0.05, g, SolveTolerance::DETERMINISTIC),
            Err(Error::BracketOverflow { .. })
        ));
    }

    #[test]
    fn bracket_doubles_for_wide_distributions() {
        // 2(1 − Φ(R/40)): root at 40·1.96
        let g = |r: f64| two_sided(r / 40.0);
        let sol = solve_r(0.05, g, SolveTolerance::fixed(1e-12)).unwrap();
        assert!((sol.r - 40.0 * 1.959_963_984_540_054).abs() < 1e-7);
    }

    #[test]
    fn stalls_on_jump() {
        let g = |r: f64| {
            Ok(TailEstimate::exact(
                if r < 0.3 { 0.9 } else { 0.01 },
                Method::Oracle,
            ))
        };
        assert!(matches!(
            solve_r(0.05, g, SolveTolerance::fixed(1e-6)),
            Err(Error::SolverStalled { .. })
        ));
    }

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        assert!(solve_r(0.0, two_sided, SolveTolerance::DETERMINISTIC).is_err());
        assert!(solve_r(1.0, two_sided, SolveTolerance::DETERMINISTIC).is_err());
    }

    #[test]
    fn var_identity_values() {
        assert_eq!(var_from_r(0.0, 0.0), 0.0);
        assert!((var_from_r(0.9160, -31.2689) - 31.688_428).abs() < 1e-9);
        assert!((var_from_r(0.6069, -3.8596) - 4.043_763_805).abs() < 1e-9);
        assert_eq!(var_from_r_pos_only(2.0, 1.0), -3.0);
    }

    #[test]
    fn se_scaled_tolerance() {
        let est = TailEstimate {
            value: 0.0512,
            standard_error: 0.004,
            method: Method::Mixed,
            evaluations: 1,
        };
        assert!(SolveTolerance::MONTE_CARLO.accepts(&est, 0.05));
        assert!(!SolveTolerance::DETERMINISTIC.accepts(&est, 0.05));
    }
}
