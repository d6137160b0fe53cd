#![allow(dead_code)]

use mechlab_core::adversarial::ValidPair;
use mechlab_core::domain::{default_epsilon, Params};
use mechlab_core::IndexSet;

pub const N16: usize = 16;
pub const S16: [usize; 3] = [1, 2, 3];
pub const T16: [usize; 3] = [3, 4, 5];

pub fn params16() -> Params {
    Params::new(16, default_epsilon(), 6, 1, 2).unwrap()
}

/// The n = 16 instance: N = 6, |S∩T| = 1, S-threshold 2, T-threshold 2.
pub fn pair16() -> ValidPair {
    ValidPair::new(IndexSet::from_indices(N16, S16), IndexSet::from_indices(N16, T16), params16()).unwrap()
}

pub fn mask(indices: &[usize]) -> u64 {
    indices.iter().fold(0, |m, &i| m | 1 << i)
}

/// Case-by-case evaluation of the adversarial rule on bitmasks.
pub fn truth_table_rule(x: u64, s: u64, t: u64, cap: u32, s_thr: u32, t_thr: u32) -> u64 {
    let size = x.count_ones();
    if size > cap {
        return 0;
    }
    let in_t = (x & t).count_ones();
    let in_s = (x & s).count_ones();
    if in_t <= t_thr || in_s >= s_thr {
        x
    } else {
        0
    }
}

/// Bit-reversal over `n` bits, so that numeric order equals the order of
/// the bitstrings `y_0 y_1 … y_{n-1}`.
pub fn lex_key(m: u64, n: usize) -> u64 {
    m.reverse_bits() >> (64 - n)
}
