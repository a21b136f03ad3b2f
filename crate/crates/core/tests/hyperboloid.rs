mod common;

use common::*;
use hypervar::hyperboloid::{
    g_normal_mixed, g_normal_neg_only, g_normal_pos_only, mc_oracle, GEvaluator,
    HyperboloidProblem, McConfig,
};
use hypervar::linalg::SignedSpectrum;
use hypervar::{Method, TailEstimate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| 10f64.powf(rng.random_range(-1.5..0.3)))
        .collect()
}

fn z(a: &TailEstimate, b: &TailEstimate) -> f64 {
    let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
    (a.value - b.value).abs() / se.max(f64::MIN_POSITIVE)
}

/// Each route against the sampling oracle on 20 random spectra with up to six
/// weights per side; at a 3σ threshold one miss in 20 is tolerated.
#[test]
fn routes_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let oracle_cfg = |k: u64| McConfig::new(9_000 + k, 16, 10_000, false).unwrap();
    let mut hits = [0; 3];
    for k in 0..20u64 {
        let (n_minus, n_plus) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let minus = weights(&mut rng, n_minus);
        let plus = weights(&mut rng, n_plus);
        let x_neg = minus.iter().sum::<f64>() * rng.random_range(0.2..2.0);
        let x_pos = plus.iter().sum::<f64>() * rng.random_range(0.2..2.0);
        let x_mix = minus.iter().sum::<f64>() * rng.random_range(0.05..1.5);

        let s = SignedSpectrum::from_weights(vec![], minus.clone()).unwrap();
        let r = x_neg.sqrt();
        if z(
            &g_normal_neg_only(r, &minus).unwrap(),
            &mc_oracle(r, &s, oracle_cfg(k)).unwrap(),
        ) <= 3.0
        {
            hits[0] += 1;
        }

        let s = SignedSpectrum::from_weights(plus.clone(), vec![]).unwrap();
        let r = x_pos.sqrt();
        let lower = g_normal_pos_only(r, &plus).unwrap();
        let upper = mc_oracle(r, &s, oracle_cfg(k)).unwrap();
        // the oracle counts −|w₊|² ≥ R², which is empty for R > 0; compare P(|w₊|² ≤ R²) by sampling directly
        assert_eq!(upper.value, 0.0);
        let flipped = SignedSpectrum::from_weights(vec![], plus.clone()).unwrap();
        let above = mc_oracle(r, &flipped, oracle_cfg(k)).unwrap();
        let below = TailEstimate {
            value: 1.0 - above.value,
            ..above
        };
        if z(&lower, &below) <= 3.0 {
            hits[1] += 1;
        }

        let s = SignedSpectrum::from_weights(plus, minus).unwrap();
        let r = x_mix.sqrt();
        let mixed =
            g_normal_mixed(r, &s, McConfig::new(100 + k, 16, 10_000, true).unwrap()).unwrap();
        if z(&mixed, &mc_oracle(r, &s, oracle_cfg(k)).unwrap()) <= 3.0 {
            hits[2] += 1;
        }
    }
    assert!(
        hits.iter().all(|&h| h >= 19),
        "agreements (neg, pos, mixed): {hits:?}"
    );
}

#[test]
fn mixed_matches_inversion_oracle_on_ten_option_spectrum() {
    let s = mixed_spectrum();
    let mc = McConfig::default();
    for r in [0.3, 0.6069, 0.7176, 0.8455, 1.2] {
        let est = g_normal_mixed(r, &s, mc).unwrap();
        let exact = imhof_g(&s, r, 1e-10);
        assert!(
            (est.value - exact).abs() <= 3.0 * est.standard_error + 1e-9,
            "R = {r}: {} ± {} vs {exact}",
            est.value,
            est.standard_error
        );
    }
}

#[test]
fn vanishing_positive_weight_reduces_to_neg_only() {
    let minus = vec![0.1, 0.25, 0.4];
    let s = SignedSpectrum::from_weights(vec![1e-12], minus.clone()).unwrap();
    for r in [0.0, 0.5, 1.0, 2.0] {
        let mixed = g_normal_mixed(r, &s, McConfig::new(3, 8, 2_000, true).unwrap()).unwrap();
        let exact = g_normal_neg_only(r, &minus).unwrap();
        // the inner tail is tabulated to 2e-11
        assert!(
            (mixed.value - exact.value).abs() <= 3.0 * mixed.standard_error + 1e-10,
            "R = {r}"
        );
    }
}

#[test]
fn symmetric_spectrum_at_zero_is_half() {
    let s = SignedSpectrum::from_weights(vec![1.0; 3], vec![1.0; 3]).unwrap();
    let est = g_normal_mixed(0.0, &s, McConfig::new(11, 16, 20_000, true).unwrap()).unwrap();
    assert!(
        (est.value - 0.5).abs() <= 3.0 * est.standard_error,
        "{est:?}"
    );
}

#[test]
fn far_radius_vanishes() {
    let s = mixed_spectrum();
    let est = g_normal_mixed(50.0, &s, McConfig::new(1, 4, 1_000, true).unwrap()).unwrap();
    assert!(est.value < 1e-12 && est.standard_error < 1e-12, "{est:?}");
}

#[test]
fn closed_form_edges() {
    assert_eq!(g_normal_neg_only(0.0, &[0.3, 1.0]).unwrap().value, 1.0);
    assert!((g_normal_neg_only(1.959_964, &[1.0]).unwrap().value - 0.05).abs() < 1e-6);
    assert_eq!(g_normal_pos_only(0.0, &[0.3, 1.0]).unwrap().value, 0.0);
    assert!((g_normal_pos_only(1.959_964, &[1.0]).unwrap().value - 0.95).abs() < 1e-6);
}

/// Same budget, 20 seeds: the antithetic radius pairing lowers the standard
/// error in most of them.
#[test]
fn antithetic_reduces_standard_error() {
    let s = mixed_spectrum();
    let mut better = 0;
    for seed in 0..20 {
        let a = g_normal_mixed(0.6069, &s, McConfig::new(seed, 16, 4_000, true).unwrap()).unwrap();
        let p = g_normal_mixed(0.6069, &s, McConfig::new(seed, 16, 4_000, false).unwrap()).unwrap();
        if a.standard_error <= p.standard_error {
            better += 1;
        }
    }
    assert!(better > 10, "antithetic better in {better}/20");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let s = mixed_spectrum();
    let cfg = McConfig::new(5, 6, 3_000, true).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    g_normal_mixed(0.7, &s, cfg).unwrap(),
                    mc_oracle(0.7, &s, cfg).unwrap(),
                )
            })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn auto_route_equals_forced_route() {
    for (spectrum, method) in [
        (calls_spectrum(), Method::NegOnly),
        (mixed_spectrum(), Method::Mixed),
    ] {
        let problem = HyperboloidProblem::normal(spectrum).unwrap();
        let auto = problem.signature().unwrap().method();
        assert_eq!(auto, method);
        let cfg = McConfig::new(2, 4, 2_000, true).unwrap();
        let mut a = GEvaluator::new(&problem, auto, cfg).unwrap();
        let mut b = GEvaluator::new(&problem, method, cfg).unwrap();
        for r in [0.1, 0.7, 1.3] {
            assert_eq!(a.evaluate(r).unwrap(), b.evaluate(r).unwrap());
        }
    }
}
