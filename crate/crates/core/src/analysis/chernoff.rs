use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};

use crate::{BigRational, Error, Rational};

/// Tail bound for a sum `X` of i.i.d. binary variables:
/// `Pr[X > Y] < e^{−Y/4}` whenever `Y ≥ 3·E[X]`.
pub fn chernoff_bound(mean: Rational, threshold: Rational) -> Result<f64, Error> {
    if mean < Rational::zero() {
        return Err(Error::HypothesisViolated(alloc::format!("mean {mean} is negative")));
    }
    if threshold < mean * 3 {
        return Err(Error::HypothesisViolated(alloc::format!("Y = {threshold} is below 3 * E[X] = {}", mean * 3)));
    }
    Ok(libm::exp(-crate::to_f64(&threshold) / 4.0))
}

/// Exact `Pr[Bin(trials, p) > threshold]`.
pub fn binomial_upper_tail(trials: u32, p: Rational, threshold: Rational) -> BigRational {
    let num = BigInt::from(*p.numer());
    let den = BigInt::from(*p.denom());
    let rest = &den - &num;
    let mut coef = BigInt::one();
    let mut total = BigInt::zero();
    for j in 0..=trials {
        if j > 0 {
            coef = coef * BigInt::from(trials - j + 1) / BigInt::from(j);
        }
        if Rational::from_integer(j as i64) > threshold {
            total += &coef * Pow::pow(&num, j) * Pow::pow(&rest, trials - j);
        }
    }
    BigRational::new(total, Pow::pow(&den, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_value() {
        let b = chernoff_bound(Rational::from_integer(1), Rational::from_integer(3)).unwrap();
        assert!((b - 0.472_366_552_741_015).abs() < 1e-12);
    }

    #[test]
    fn hypothesis_is_enforced() {
        assert!(matches!(chernoff_bound(Rational::from_integer(1), Rational::from_integer(2)), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn tail_of_fair_coins() {
        // Pr[Bin(4, 1/2) > 2] = 5/16
        let t = binomial_upper_tail(4, Rational::new(1, 2), Rational::from_integer(2));
        assert_eq!(t, BigRational::new(5.into(), 16.into()));
        assert!(binomial_upper_tail(4, Rational::new(1, 2), Rational::from_integer(4)).is_zero());
    }

    #[test]
    fn sparse_bernoulli_tail_below_bound() {
        let tail = crate::big_to_f64(&binomial_upper_tail(64, Rational::new(1, 64), Rational::from_integer(3)));
        assert!(tail <= chernoff_bound(Rational::from_integer(1), Rational::from_integer(3)).unwrap());
    }
}
