mod common;

use common::*;
use mechlab_core::adversarial::{alloc_ast, sample_valid_pair, AdversarialRule, PairDistribution};
use mechlab_core::analysis::{
    adversarial_welfare_exact, binomial_upper_tail, chernoff_bound, concentration_premise, expected_welfare_exact, expected_welfare_mc,
    EstimateMethod,
};
use mechlab_core::domain::{default_epsilon, Allocation, Params, PriorDistribution, Setting, TypeProfile};
use mechlab_core::oracle::OracleSession;
use mechlab_core::transform::{run, FeasibilityMode, Transformation, TransformationContext};
use mechlab_core::{big_to_f64, BigRational, Rational};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prior16() -> PriorDistribution {
    PriorDistribution::new(params16(), Setting::SingleParameter, 0)
}

fn exact16() -> BigRational {
    BigRational::new("1042420948723925875563435".parse::<BigInt>().unwrap(), "302231454903657293676544".parse::<BigInt>().unwrap())
}

#[test]
fn identity_rule_welfare_is_nq() {
    let params = Params {
        n: 4,
        epsilon: default_epsilon(),
        max_support: 4,
        overlap: 1,
        s_threshold: 2,
        t_threshold: 1,
        alpha: Rational::from_integer(8),
        activation_prob: Rational::new(1, 2),
    };
    let prior = PriorDistribution::new(params, Setting::SingleParameter, 0);
    let est = expected_welfare_exact(|x: &TypeProfile| Allocation::new(x.support()), &prior).unwrap();
    assert_eq!(est.exact.as_ref(), Some(&BigRational::from_integer(2.into())));
    assert_eq!(est.method, EstimateMethod::Exact);
    assert_eq!((est.ci_low, est.mean, est.ci_high), (2.0, 2.0, 2.0));
}

#[test]
fn empty_rule_has_zero_welfare() {
    let prior = prior16();
    let exact = expected_welfare_exact(|x: &TypeProfile| Allocation::empty(x.n()), &prior).unwrap();
    assert_eq!(exact.mean, 0.0);
    let mc = expected_welfare_mc(|x: &TypeProfile| Allocation::empty(x.n()), &prior, 500, 1).unwrap();
    assert_eq!((mc.ci_low, mc.mean, mc.ci_high), (0.0, 0.0, 0.0));
}

#[test]
fn adversarial_welfare_regression_and_floor() {
    let pair = pair16();
    let enumerated = expected_welfare_exact(|x: &TypeProfile| alloc_ast(x, &pair), &prior16()).unwrap();
    assert_eq!(enumerated.exact.as_ref(), Some(&exact16()));
    assert_eq!(adversarial_welfare_exact(&pair, Setting::SingleParameter), exact16());
    let premise = big_to_f64(&concentration_premise(&pair));
    assert!((premise - 0.7250947204802647).abs() < 1e-12);
    assert!(premise >= 0.5);
    assert!(enumerated.mean >= 1.5);
}

#[test]
fn monte_carlo_intervals_cover_the_exact_value() {
    let pair = pair16();
    let truth = big_to_f64(&exact16());
    let covered = (0..200u64)
        .filter(|&seed| {
            let est = expected_welfare_mc(|x: &TypeProfile| alloc_ast(x, &pair), &prior16(), 1000, seed).unwrap();
            assert!(est.ci_low <= est.mean && est.mean <= est.ci_high);
            est.covers(truth)
        })
        .count();
    assert!(covered >= 190, "{covered}/200");
}

#[test]
fn doubling_samples_shrinks_the_interval_by_root_two() {
    let pair = pair16();
    let mut ratios = Vec::new();
    for seed in 0..40u64 {
        let a = expected_welfare_mc(|x: &TypeProfile| alloc_ast(x, &pair), &prior16(), 1000, seed).unwrap();
        let b = expected_welfare_mc(|x: &TypeProfile| alloc_ast(x, &pair), &prior16(), 2000, seed + 1000).unwrap();
        ratios.push(b.ci_width() / a.ci_width());
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2, "{mean}");
}

#[test]
fn chernoff_examples() {
    let b = chernoff_bound(Rational::from_integer(1), Rational::from_integer(3)).unwrap();
    assert!((b - (-0.75f64).exp()).abs() < 1e-15);
    assert!((b - 0.4724).abs() < 1e-4);
    assert!(chernoff_bound(Rational::from_integer(1), Rational::from_integer(2)).is_err());
}

#[test]
fn sparse_sum_tail_against_bound() {
    let bound = (-0.75f64).exp();
    let exact = big_to_f64(&binomial_upper_tail(64, Rational::new(1, 64), Rational::from_integer(3)));
    assert!(exact <= bound);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let trials = 1_000_000u32;
    let mut over = 0u32;
    for _ in 0..trials {
        let x = (0..64).filter(|_| rng.random::<u64>() < u64::MAX / 64).count();
        over += u32::from(x > 3);
    }
    let freq = over as f64 / trials as f64;
    assert!(freq <= bound);
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((freq - exact).abs() <= 4.0 * se, "{freq} vs {exact}");
}

/// Probability that one prior draw `x` has `|A_{S,T}(x) ∩ T| > 2` when `T` is
/// fixed and `S` is uniform over its valid completions, by enumeration.
fn per_query_success() -> f64 {
    let t = mask(&T16);
    let q: f64 = 9.0 / 32.0;
    let threes: Vec<u64> = (0u64..1 << N16).filter(|m| m.count_ones() == 3 && (m & t).count_ones() == 1).collect();
    assert_eq!(threes.len(), 3 * 78);
    let mut total = 0.0;
    for x in 0u64..1 << N16 {
        let k = x.count_ones() as i32;
        let px = q.powi(k) * (1.0 - q).powi(16 - k);
        let hits = threes.iter().filter(|&&s| (truth_table_rule(x, s, t, 6, 2, 2) & t).count_ones() > 2).count();
        total += px * hits as f64 / threes.len() as f64;
    }
    total
}

#[test]
fn probe_event_frequency_respects_union_bound() {
    let p = per_query_success();
    assert!(p > 0.0);
    let q = 32usize;
    let trials = 2000u64;
    let pd = PairDistribution::uniform(params16(), 8);
    let mut events = 0u64;
    for i in 0..trials {
        let pair = sample_valid_pair(&pd, i).unwrap();
        let t_profile = TypeProfile::binary(pair.t());
        let rule = AdversarialRule { pair: pair.clone() };
        let prior = PriorDistribution::new(params16(), Setting::SingleParameter, 0);
        let mut ctx = TransformationContext::new(OracleSession::new(rule, None, i), prior, FeasibilityMode::DownwardClosedInference, i);
        run(Transformation::PresampledRange { q }, &mut ctx, &t_profile).unwrap();
        if ctx.session.log().iter().any(|r| r.output.served().intersection_len(pair.t()) > 2) {
            events += 1;
        }
    }
    let bound = (q as f64 * p).min(1.0);
    let freq = events as f64 / trials as f64;
    let se = (bound * (1.0 - bound) / trials as f64).sqrt();
    assert!(freq <= bound + 3.0 * se, "{freq} vs {bound}");
}
