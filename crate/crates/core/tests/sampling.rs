mod common;

use mechlab_core::domain::{default_epsilon, derive_params, sample_profile, Params, PriorDistribution, Setting};
use mechlab_core::Rational;
use proptest::prelude::*;

/// A Bernoulli prior with free `q` and `α`, outside the adversarial family's invariants.
fn free_prior(n: usize, q: Rational, alpha: i64, setting: Setting, seed: u64) -> PriorDistribution {
    let params = Params {
        n,
        epsilon: default_epsilon(),
        max_support: n,
        overlap: 1,
        s_threshold: 2,
        t_threshold: 1,
        alpha: Rational::from_integer(alpha),
        activation_prob: q,
    };
    PriorDistribution::new(params, setting, seed)
}

#[test]
fn support_size_mean() {
    let prior = free_prior(64, Rational::new(1, 4), 4, Setting::SingleParameter, 11);
    let draws = 100_000u64;
    let sizes: Vec<f64> = (0..draws).map(|k| sample_profile(&prior, k).support_len() as f64).collect();
    let mean = sizes.iter().sum::<f64>() / draws as f64;
    // Var |x| = n q (1 - q)
    let se = (64.0 * 0.25 * 0.75 / draws as f64).sqrt();
    assert!((mean - 16.0).abs() <= 3.0 * se, "{mean}");
}

#[test]
fn conditional_mean_of_active_coordinates() {
    for alpha in [4i64, 8, 12] {
        let prior = free_prior(32, Rational::new(1, 2), alpha, Setting::MultiDimensional, 3);
        let mut vals = Vec::new();
        for k in 0..20_000 {
            let x = sample_profile(&prior, k);
            for v in x.values() {
                if *v != Rational::from_integer(0) {
                    assert!(*v == Rational::from_integer(1) || *v == Rational::from_integer(alpha));
                    vals.push(*v.numer() as f64);
                }
            }
        }
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let expected = 2.0 - 1.0 / alpha as f64;
        assert!((mean - expected).abs() <= 3.0 * (var / m).sqrt(), "alpha {alpha}: {mean} vs {expected}");
    }
}

#[test]
fn streams_are_reproducible() {
    let params = common::params16();
    for setting in [Setting::SingleParameter, Setting::MultiDimensional] {
        let a = PriorDistribution::new(params.clone(), setting, 99);
        let b = PriorDistribution::new(params.clone(), setting, 99);
        let sa: Vec<_> = (0..500).map(|k| sample_profile(&a, k)).collect();
        let sb: Vec<_> = (0..500).map(|k| b.sample(k)).collect();
        assert_eq!(sa, sb);
        let other: Vec<_> = (0..500).map(|k| sample_profile(&a.with_seed(100), k)).collect();
        assert_ne!(sa, other);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn derived_params_satisfy_invariants(n in 16usize..=1_000_000, eps_pct in 1i64..=20) {
        let eps = Rational::new(eps_pct, 100);
        match derive_params(n, eps) {
            Ok(p) => {
                prop_assert!(p.validate().is_ok());
                prop_assert_eq!(p.s_threshold, 2 * p.overlap);
                prop_assert!(p.max_support % 2 == 0 && p.max_support <= n);
                prop_assert!(p.s_threshold <= p.max_support / 2);
                prop_assert_eq!(p.alpha, Rational::new(2 * p.max_support as i64, p.overlap as i64));
                prop_assert_eq!(p.activation_prob, Rational::new(3 * p.max_support as i64, 4 * n as i64));
                prop_assert!(p.activation_prob < Rational::from_integer(1));
            }
            Err(e) => prop_assert!(matches!(e, mechlab_core::Error::ParameterInfeasible(_))),
        }
    }
}

#[test]
fn derive_params_feasibility_boundary() {
    // the S-threshold 2·n^{-1/4}·N exceeds N/2 until n reaches 256
    for n in [16usize, 64] {
        for eps in 1..=20 {
            assert!(matches!(derive_params(n, Rational::new(eps, 100)), Err(mechlab_core::Error::ParameterInfeasible(_))));
        }
    }
    for n in [1024usize, 4096, 65536, 1_000_000] {
        for eps in 1..=20 {
            assert!(derive_params(n, Rational::new(eps, 100)).is_ok(), "n = {n}, eps = {eps}/100");
        }
    }
}
