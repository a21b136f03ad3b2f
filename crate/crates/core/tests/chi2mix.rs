mod common;

use common::imhof_upper;
use hypervar::chi2mix::{mixture_upper_tail, ChiSquareMixture, RubenSeries, SeriesConfig};
use proptest::prelude::*;

fn weights(min_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-2.0..0.5f64).prop_map(|e| 10f64.powf(e)), min_len..=8)
}

/// Five or more weights keep the inversion range short.
fn inversion_weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-1.5..0.5f64).prop_map(|e| 10f64.powf(e)), 5..=8)
}

fn tail(w: &[f64], x: f64) -> f64 {
    mixture_upper_tail(&ChiSquareMixture::new(w.to_vec()).unwrap(), x)
        .unwrap()
        .value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn agrees_with_characteristic_function_inversion(w in inversion_weights(), u in 0.1..3.0f64) {
        let x = u * w.iter().sum::<f64>();
        let series = tail(&w, x);
        let oracle = imhof_upper(&w, x, 1e-9);
        prop_assert!((series - oracle).abs() < 1e-8, "{series} vs {oracle}");
    }

    #[test]
    fn nonincreasing_in_x(w in weights(1), a in 0.0..5.0f64, b in 0.0..5.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(tail(&w, hi) <= tail(&w, lo) + 1e-12);
    }

    #[test]
    fn scale_invariance(w in weights(1), u in 0.1..3.0f64, c in 0.01..100.0f64) {
        let x = u * w.iter().sum::<f64>();
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        prop_assert!((tail(&w, x) - tail(&scaled, c * x)).abs() < 1e-9);
    }

    #[test]
    fn permutation_invariance(w in weights(2).prop_shuffle(), u in 0.1..3.0f64) {
        let x = u * w.iter().sum::<f64>();
        let mut sorted = w.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert!((tail(&w, x) - tail(&sorted, x)).abs() < 1e-12);
    }

    #[test]
    fn bound_covers_tighter_evaluation(w in weights(1), u in 0.1..3.0f64) {
        let x = u * w.iter().sum::<f64>();
        let mix = ChiSquareMixture::new(w).unwrap();
        let loose = mix.upper_tail_with(x, SeriesConfig { max_terms: 20_000, tolerance: 1e-6 }).unwrap();
        let tight = mix.upper_tail_with(x, SeriesConfig { max_terms: 20_000, tolerance: 1e-13 }).unwrap();
        prop_assert!((loose.value - tight.value).abs() <= loose.standard_error + 1e-12);
    }
}

#[test]
fn cached_series_matches_fresh_evaluation() {
    let mix = ChiSquareMixture::new(vec![0.05, 0.3, 1.1, 0.01]).unwrap();
    let mut cached = RubenSeries::new(&mix, SeriesConfig::default());
    for &x in &[5.0, 0.2, 12.0, 1.0, 0.0] {
        let a = cached.upper_tail(x).unwrap().value;
        let b = RubenSeries::new(&mix, SeriesConfig::default())
            .upper_tail(x)
            .unwrap()
            .value;
        assert_eq!(a.to_bits(), b.to_bits(), "x = {x}");
    }
}

#[test]
fn known_mixture_value() {
    // weights (0.5, 0.3, 0.2) at x = 1, by 30-digit characteristic-function inversion
    assert!((tail(&[0.5, 0.3, 0.2], 1.0) - 0.379_404_019_401_764_1).abs() < 1e-10);
}
