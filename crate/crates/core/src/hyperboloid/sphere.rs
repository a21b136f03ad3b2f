//! Uniform directions, Haar rotations and the antipodal degree-3 sphere rule.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::linalg::SquareMatrix;

/// Surface area of the unit sphere `S^{n−1} ⊂ ℝⁿ`: `2 π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    (std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

/// Fills `out` with a uniformly distributed unit vector.
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            norm2 += *x * *x;
        }
        if norm2 > 0.0 {
            let inv = norm2.sqrt().recip();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Haar-distributed orthogonal matrix: Gram-Schmidt on Gaussian columns.
pub fn haar_rotation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SquareMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        // two passes keep the columns orthogonal to rounding level
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, ci)| *x -= dot * ci);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    SquareMatrix::from_fn(n, |i, j| cols[j][i])
}

/// Values of `ξ diag(1/d) ξᵗ` at the rule points `±Q eⱼ` of the antipodal
/// degree-3 rule, one per antipodal pair. The rule weights are all
/// `|S^{n−1}| / (2n)`.
pub fn rotated_axis_forms(rotation: &SquareMatrix, weights: &[f64]) -> Vec<f64> {
    let n = rotation.dim();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| rotation.get(i, j).powi(2) / weights[i])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::rng::{replicate_stream, Purpose};

    #[test]
    fn areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = replicate_stream(1, Purpose::Rotations, 0);
        for n in 1..8 {
            let q = haar_rotation(&mut rng, n);
            let qtq = q.transpose().matmul(&q);
            assert!(qtq.max_abs_diff(&SquareMatrix::identity(n)) < 1e-13);
        }
    }

    #[test]
    fn degree_three_rule_is_exact_for_quadratics() {
        // average of ξ A ξᵗ over the sphere is tr(A)/n for any rotation
        let mut rng = replicate_stream(2, Purpose::Rotations, 0);
        let w = [0.5, 2.0, 4.0, 0.1];
        let q = haar_rotation(&mut rng, 4);
        let forms = rotated_axis_forms(&q, &w);
        let avg = forms.iter().sum::<f64>() / 4.0;
        let exact = w.iter().map(|d| 1.0 / d).sum::<f64>() / 4.0;
        assert!((avg - exact).abs() < 1e-12);
    }
}
