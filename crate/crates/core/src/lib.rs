//! Core of the mechlab testbed for black-box mechanism-design transformations.
//!
//! Everything here is pure computation over exact rationals: the value types,
//! the adversarial allocation family `A_{S,T}`, query-counted oracle sessions,
//! baseline transformations, incentive verifiers and the statistics used by
//! the experiment runner. IO, configuration and the CLI live in the `mechlab`
//! crate.
#![no_std]

extern crate alloc;

pub mod adversarial;
pub mod analysis;
pub mod domain;
mod error;
pub mod index_set;
pub mod oracle;
pub mod rng;
pub mod transform;
pub mod verify;

pub use error::Error;
pub use index_set::IndexSet;

/// Exact value type used for valuations, welfare and matching weights.
pub type Rational = num_rational::Ratio<i64>;

/// Arbitrary-precision rational, used where probabilities multiply up.
pub type BigRational = num_rational::BigRational;

/// Converts an exact rational to the nearest `f64`.
pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Converts an arbitrary-precision rational to `f64` without overflowing on
/// huge numerators and denominators.
pub fn big_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both sides down until they fit in an f64 exponent range.
    let bits = r.numer().bits().max(r.denom().bits());
    let shift = bits.saturating_sub(1000) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    n / d
}

pub(crate) fn to_big(r: &Rational) -> BigRational {
    BigRational::new((*r.numer()).into(), (*r.denom()).into())
}
