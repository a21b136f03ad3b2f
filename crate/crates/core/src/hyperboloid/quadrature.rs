//! Globally adaptive Gauss-Kronrod (7, 15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let sum = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol·|I|)` or `max_intervals` is reached.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Quadrature {
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    intervals.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || intervals.len() >= max_intervals {
            return Quadrature {
                value,
                error,
                evaluations,
            };
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// `∫_lo^∞ f(r) dr` through `r = lo − scale·ln(1 − u)`, `u ∈ (0, 1)`.
///
/// Also returns the transformed integrand mass estimate beyond
/// `u = 1 − 2⁻³⁰`, which callers compare against their tolerance to detect
/// integrands that decay too slowly for the truncation.
pub fn integrate_tail(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    scale: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> (Quadrature, f64) {
    let mut g = |u: f64| {
        let one_minus = 1.0 - u;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let r = lo - scale * one_minus.ln();
        let v = f(r) * scale / one_minus;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let q = integrate(&mut g, 0.0, 1.0, rel_tol, abs_tol, max_intervals);
    let u_last = 1.0 - 2f64.powi(-30);
    let tail = g(u_last) * (1.0 - u_last);
    (q, tail)
}
