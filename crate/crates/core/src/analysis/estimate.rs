use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Zero};

use crate::adversarial::ValidPair;
use crate::domain::{
    domain_size, enumerate_domain, sample_profile_for, welfare_unchecked, Allocation, PriorDistribution, Setting, TypeProfile,
};
use crate::rng::Purpose;
use crate::{big_to_f64, to_f64, BigRational, Error, Rational};

/// Default enumeration limits on `n`.
pub const EXACT_LIMIT_SINGLE: usize = 20;
pub const EXACT_LIMIT_MULTI: usize = 13;

/// 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
}

/// An expected-welfare estimate with a 95% interval (degenerate when exact).
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareEstimate {
    pub mean: f64,
    /// The exact value, when known.
    pub exact: Option<BigRational>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: EstimateMethod,
    pub samples: u64,
}

impl WelfareEstimate {
    pub fn exact(value: BigRational, samples: u64) -> Self {
        let mean = big_to_f64(&value);
        WelfareEstimate { mean, exact: Some(value), ci_low: mean, ci_high: mean, method: EstimateMethod::Exact, samples }
    }

    /// Normal-approximation interval from per-sample values.
    pub fn from_samples(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 { values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        let half = Z_95 * libm::sqrt(var / k);
        WelfareEstimate {
            mean,
            exact: None,
            ci_low: mean - half,
            ci_high: mean + half,
            method: EstimateMethod::MonteCarlo,
            samples: values.len() as u64,
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// `Σ_x Pr[x] · Wel(x, rule(x))` over the prior's full support, with the
/// default size limits.
pub fn expected_welfare_exact<F>(rule: F, prior: &PriorDistribution) -> Result<WelfareEstimate, Error>
where
    F: FnMut(&TypeProfile) -> Allocation,
{
    let limit = match prior.setting {
        Setting::SingleParameter => EXACT_LIMIT_SINGLE,
        Setting::MultiDimensional => EXACT_LIMIT_MULTI,
    };
    expected_welfare_exact_with_limit(rule, prior, limit)
}

/// As [`expected_welfare_exact`] but refusing only when `n > limit`.
///
/// Profiles with the same number of active and of high coordinates are
/// equally likely, so welfare is summed per `(active, high)` class and each
/// class total is weighted once.
pub fn expected_welfare_exact_with_limit<F>(mut rule: F, prior: &PriorDistribution, limit: usize) -> Result<WelfareEstimate, Error>
where
    F: FnMut(&TypeProfile) -> Allocation,
{
    let params = &prior.params;
    let n = params.n;
    if n > limit {
        return Err(Error::DomainTooLarge { size: domain_size(n, prior.setting), limit: domain_size(limit, prior.setting) });
    }
    let mut classes: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for x in enumerate_domain(n, prior.setting, params.alpha) {
        let y = rule(&x);
        if y.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.n() });
        }
        let w = welfare_unchecked(&x, &y);
        if w.is_zero() {
            continue;
        }
        let active = x.support_len();
        let high = x.values().iter().filter(|v| **v == params.alpha).count();
        *classes.entry((active, high)).or_insert_with(Rational::zero) += w;
    }
    let q = crate::to_big(&params.activation_prob);
    let p = crate::to_big(&prior.high_prob());
    let one = BigRational::one();
    let mut total = BigRational::zero();
    for ((active, high), w) in classes {
        let mut pr = Pow::pow(&q, active) * Pow::pow(&(&one - &q), n - active);
        if prior.setting == Setting::MultiDimensional {
            pr = pr * Pow::pow(&p, high) * Pow::pow(&(&one - &p), active - high);
        }
        total += pr * crate::to_big(&w);
    }
    Ok(WelfareEstimate::exact(total, domain_size(n, prior.setting) as u64))
}

/// Sample mean of `Wel(x, rule(x))` over `samples` draws from the prior's
/// Monte Carlo stream under `seed`, with a normal-approximation 95% interval.
pub fn expected_welfare_mc<F>(mut rule: F, prior: &PriorDistribution, samples: usize, seed: u64) -> Result<WelfareEstimate, Error>
where
    F: FnMut(&TypeProfile) -> Allocation,
{
    if samples < 2 {
        return Err(Error::Structural("Monte Carlo estimation needs at least 2 samples".into()));
    }
    let sampler = prior.with_seed(seed);
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples as u64 {
        let x = sample_profile_for(&sampler, Purpose::MonteCarlo, i);
        let y = rule(&x);
        if y.n() != x.n() {
            return Err(Error::DimensionMismatch { expected: x.n(), got: y.n() });
        }
        values.push(to_f64(&welfare_unchecked(&x, &y)));
    }
    Ok(WelfareEstimate::from_samples(&values))
}

/// Sizes of the four blocks `S∖T`, `S∩T`, `T∖S` and the rest.
fn blocks(pair: &ValidPair) -> [usize; 4] {
    let p = pair.params();
    let only = p.half() - p.overlap;
    [only, p.overlap, only, p.n - (p.max_support - p.overlap)]
}

fn binomials(size: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for k in 1..=size {
        let next = &row[k - 1] * BigUint::from(size - k + 1) / BigUint::from(k);
        row.push(next);
    }
    row
}

/// Sums `C(blocks, (a,b,c,d))` per total `a+b+c+d ≤ N` over the classes
/// accepted by `keep(a, b, c, d)`.
fn class_counts(pair: &ValidPair, keep: impl Fn(usize, usize, usize, usize) -> bool) -> Vec<BigUint> {
    let big_n = pair.params().max_support;
    let sizes = blocks(pair);
    let rows: Vec<Vec<BigUint>> = sizes.iter().map(|&s| binomials(s)).collect();
    let mut by_total = vec![BigUint::zero(); big_n + 1];
    for a in 0..=sizes[0] {
        for b in 0..=sizes[1] {
            for c in 0..=sizes[2] {
                let abc = a + b + c;
                if abc > big_n {
                    break;
                }
                let head = &rows[0][a] * &rows[1][b] * &rows[2][c];
                for d in 0..=sizes[3].min(big_n - abc) {
                    if keep(a, b, c, d) {
                        by_total[abc + d] += &head * &rows[3][d];
                    }
                }
            }
        }
    }
    by_total
}

/// `Σ_m counts[m] · weight(m) · q^m (1−q)^{n−m}` as an exact rational.
fn weigh(counts: &[BigUint], n: usize, q: &Rational, weight: impl Fn(usize) -> u64) -> BigRational {
    let num = BigInt::from(*q.numer());
    let den = BigInt::from(*q.denom());
    let rest = &den - &num;
    let mut total = BigInt::zero();
    for (m, c) in counts.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        total += BigInt::from(c.clone()) * BigInt::from(weight(m)) * Pow::pow(&num, m) * Pow::pow(&rest, n - m);
    }
    BigRational::new(total, Pow::pow(&den, n))
}

/// Exact `Wel(A_{S,T})` under the prior, for any `n`.
///
/// The rule only looks at how many active coordinates fall in each of the
/// four blocks cut out by `S` and `T`, so the expectation is a sum over block
/// counts rather than over profiles. In the multi-dimensional setting every
/// served coordinate contributes `E[x_i | x_i ≠ 0] = 2 − 1/α`.
pub fn adversarial_welfare_exact(pair: &ValidPair, setting: Setting) -> BigRational {
    let p = pair.params();
    let (t_thr, s_thr) = (p.t_threshold, p.s_threshold);
    let counts = class_counts(pair, |a, b, c, _| b + c <= t_thr || a + b >= s_thr);
    let support_welfare = weigh(&counts, p.n, &p.activation_prob, |m| m as u64);
    match setting {
        Setting::SingleParameter => support_welfare,
        Setting::MultiDimensional => {
            let two = Rational::from_integer(2);
            support_welfare * crate::to_big(&(two - p.alpha.recip()))
        }
    }
}

/// Exact `Pr[|x| ∈ [N/2, N] and |x∩T| ≤ ε_T·N]` under the prior.
pub fn concentration_premise(pair: &ValidPair) -> BigRational {
    let p = pair.params();
    let half = p.half();
    let t_thr = p.t_threshold;
    let counts = class_counts(pair, |a, b, c, d| a + b + c + d >= half && b + c <= t_thr);
    weigh(&counts, p.n, &p.activation_prob, |_| 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversarial::alloc_ast;
    use crate::domain::{default_epsilon, Params};
    use crate::IndexSet;

    fn fixture() -> ValidPair {
        let p = Params::new(16, default_epsilon(), 6, 1, 2).unwrap();
        ValidPair::new(IndexSet::from_indices(16, [1, 2, 3]), IndexSet::from_indices(16, [3, 4, 5]), p).unwrap()
    }

    #[test]
    fn identity_rule_has_welfare_nq() {
        // n = 4, N = 2 would violate the threshold invariants; use n = 8 with q = 3/8.
        let p = Params::new(8, default_epsilon(), 4, 1, 1).unwrap();
        let prior = PriorDistribution::new(p, Setting::SingleParameter, 0);
        let est = expected_welfare_exact(|x: &TypeProfile| Allocation::new(x.support()), &prior).unwrap();
        assert_eq!(est.exact.unwrap(), BigRational::new(3.into(), 1.into()));
        assert_eq!(est.ci_low, est.ci_high);
    }

    #[test]
    fn empty_rule_has_zero_welfare() {
        let prior = PriorDistribution::new(fixture().params().clone(), Setting::SingleParameter, 0);
        let est = expected_welfare_exact(|x: &TypeProfile| Allocation::empty(x.n()), &prior).unwrap();
        assert!(est.exact.unwrap().is_zero());
        let mc = expected_welfare_mc(|x: &TypeProfile| Allocation::empty(x.n()), &prior, 100, 3).unwrap();
        assert_eq!((mc.mean, mc.ci_low, mc.ci_high), (0.0, 0.0, 0.0));
    }

    #[test]
    fn closed_form_matches_enumeration() {
        let pair = fixture();
        let prior = PriorDistribution::new(pair.params().clone(), Setting::SingleParameter, 0);
        let brute = expected_welfare_exact(|x: &TypeProfile| alloc_ast(x, &pair), &prior).unwrap();
        assert_eq!(brute.exact.unwrap(), adversarial_welfare_exact(&pair, Setting::SingleParameter));
    }

    #[test]
    fn multi_dimensional_closed_form_matches_enumeration() {
        let p = Params::new(8, default_epsilon(), 4, 1, 1).unwrap();
        let pair = ValidPair::new(IndexSet::from_indices(8, [0, 1]), IndexSet::from_indices(8, [1, 2]), p.clone()).unwrap();
        let prior = PriorDistribution::new(p, Setting::MultiDimensional, 0);
        let brute = expected_welfare_exact(|x: &TypeProfile| alloc_ast(x, &pair), &prior).unwrap();
        assert_eq!(brute.exact.unwrap(), adversarial_welfare_exact(&pair, Setting::MultiDimensional));
    }

    #[test]
    fn refuses_large_domains() {
        let p = Params::new(64, default_epsilon(), 8, 1, 2).unwrap();
        let prior = PriorDistribution::new(p, Setting::SingleParameter, 0);
        assert!(matches!(expected_welfare_exact(|x: &TypeProfile| Allocation::empty(x.n()), &prior), Err(Error::DomainTooLarge { .. })));
    }

    #[test]
    fn mc_rejects_single_sample() {
        let prior = PriorDistribution::new(fixture().params().clone(), Setting::SingleParameter, 0);
        assert!(expected_welfare_mc(|x: &TypeProfile| Allocation::empty(x.n()), &prior, 1, 0).is_err());
    }
}
