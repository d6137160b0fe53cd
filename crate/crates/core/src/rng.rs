//! Counter-based random streams.
//!
//! Every random quantity in the crate is addressed by `(seed, purpose, index)`
//! and, within a stream, by word position. ChaCha's seekable keystream gives
//! random access, so the `index`-th sample of a stream can be produced without
//! generating the ones before it.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Rational;

/// Domain-separation tags so that unrelated streams sharing a seed never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Profile = 1,
    ValidPair = 2,
    Presample = 3,
    MonteCarlo = 4,
    SubsetFamily = 5,
    Experiment = 6,
    SubsetMembers = 7,
}

/// The stream for `(seed, purpose, index)`, positioned at its start.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Positions `rng` at the block of words reserved for `slot`.
///
/// Each slot owns four 32-bit words, i.e. two `u64` draws.
pub fn seek_slot(rng: &mut ChaCha8Rng, slot: u64) {
    rng.set_word_pos(u128::from(slot) * 4);
}

/// Exact Bernoulli trial: true with probability `p` up to a granularity of 2⁻⁶⁴.
///
/// `p` must lie in `[0, 1]`.
pub fn bernoulli<R: RngCore>(rng: &mut R, p: &Rational) -> bool {
    let draw = u128::from(rng.next_u64());
    let numer = *p.numer() as u128;
    let denom = *p.denom() as u128;
    draw * denom < numer << 64
}

/// A uniform `f64` in `[0, 1)` with 53 random bits.
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
