use alloc::vec;
use alloc::vec::Vec;
use num_traits::Zero;

use crate::Rational;

/// Maximum-weight perfect matching of a square matrix (row `i` ↦ column `m[i]`).
///
/// Hungarian algorithm with row and column potentials, run on negated
/// weights in exact arithmetic; `O(k³)` for a `k × k` matrix.
pub fn max_weight_matching(weights: &[Vec<Rational>]) -> (Vec<usize>, Rational) {
    let k = weights.len();
    if k == 0 {
        return (Vec::new(), Rational::zero());
    }
    assert!(weights.iter().all(|row| row.len() == k), "weight matrix must be square");
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];

    // 1-based: row/column 0 is the virtual source.
    let mut u = vec![Rational::zero(); k + 1];
    let mut v = vec![Rational::zero(); k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        owner[0] = row;
        let mut col = 0usize;
        let mut min_slack: Vec<Option<Rational>> = vec![None; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col] = true;
            let i0 = owner[col];
            let mut delta: Option<Rational> = None;
            let mut next = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0, j) - u[i0] - v[j];
                if min_slack[j].is_none_or(|m| reduced < m) {
                    min_slack[j] = Some(reduced);
                    way[j] = col;
                }
                if delta.is_none_or(|d| min_slack[j].unwrap() < d) {
                    delta = min_slack[j];
                    next = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=k {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else if let Some(m) = min_slack[j].as_mut() {
                    *m -= delta;
                }
            }
            col = next;
            if owner[col] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col];
            owner[col] = owner[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; k];
    for j in 1..=k {
        assignment[owner[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().fold(Rational::zero(), |acc, (i, &j)| acc + weights[i][j]);
    (assignment, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;

    /// Maximum over all `k!` permutations.
    fn brute_force_matching(weights: &[Vec<Rational>]) -> (Vec<usize>, Rational) {
        let k = weights.len();
        let mut best: Option<(Vec<usize>, Rational)> = None;
        for perm in (0..k).permutations(k) {
            let w = perm.iter().enumerate().fold(Rational::zero(), |acc, (i, &j)| acc + weights[i][j]);
            if best.as_ref().is_none_or(|(_, b)| w > *b) {
                best = Some((perm, w));
            }
        }
        best.unwrap_or((Vec::new(), Rational::zero()))
    }

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&x| Rational::from_integer(x)).collect()).collect()
    }

    #[test]
    fn identity_dominant() {
        let (perm, w) = max_weight_matching(&m(&[&[2, 1], &[1, 2]]));
        assert_eq!(perm, [0, 1]);
        assert_eq!(w, Rational::from_integer(4));
    }

    #[test]
    fn swap() {
        let (perm, w) = max_weight_matching(&m(&[&[0, 1], &[1, 0]]));
        assert_eq!(perm, [1, 0]);
        assert_eq!(w, Rational::from_integer(2));
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(max_weight_matching(&[]).1, Rational::zero());
        assert_eq!(max_weight_matching(&m(&[&[5]])), (vec![0], Rational::from_integer(5)));
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<Rational>>> {
        (1usize..=7).prop_flat_map(|k| {
            proptest::collection::vec(proptest::collection::vec((0i64..50, 1i64..7).prop_map(|(a, b)| Rational::new(a, b)), k), k)
        })
    }

    proptest! {
        #[test]
        fn agrees_with_permutation_brute_force(w in matrix()) {
            let (perm, total) = max_weight_matching(&w);
            let check = perm.iter().enumerate().fold(Rational::zero(), |acc, (i, &j)| acc + w[i][j]);
            prop_assert_eq!(check, total);
            let mut sorted = perm.clone();
            sorted.sort();
            prop_assert_eq!(sorted, (0..w.len()).collect::<Vec<_>>());
            prop_assert_eq!(total, brute_force_matching(&w).1);
        }
    }
}
