//! The lower-bound family: valid pairs `(S, T)`, the rule `A_{S,T}` and its
//! downward-closed feasibility set `Alloc_{S,T}`.

use alloc::format;
use alloc::vec::Vec;

use crate::domain::{Allocation, Params, TypeProfile};
use crate::oracle::AllocationRule;
use crate::rng::{self, Purpose};
use crate::{Error, IndexSet};

/// Two index sets with `|S| = |T| = N/2` and `|S ∩ T| = ε_ST·N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidPair {
    s: IndexSet,
    t: IndexSet,
    params: Params,
}

impl ValidPair {
    pub fn new(s: IndexSet, t: IndexSet, params: Params) -> Result<Self, Error> {
        let n = params.n;
        if s.universe() != n || t.universe() != n {
            return Err(Error::DimensionMismatch { expected: n, got: if s.universe() != n { s.universe() } else { t.universe() } });
        }
        let half = params.half();
        if s.len() != half || t.len() != half {
            return Err(Error::Structural(format!("|S| = {} and |T| = {} must both equal N/2 = {half}", s.len(), t.len())));
        }
        let overlap = s.intersection_len(&t);
        if overlap != params.overlap {
            return Err(Error::Structural(format!("|S ∩ T| = {overlap} must equal eps_ST_N = {}", params.overlap)));
        }
        Ok(ValidPair { s, t, params })
    }

    pub fn s(&self) -> &IndexSet {
        &self.s
    }

    pub fn t(&self) -> &IndexSet {
        &self.t
    }

    pub fn params(&self) -> &Params {
        &self.params
    }
}

/// Which side of the pair, if any, is held fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairConditioning {
    /// `Γ`: uniform over all valid pairs.
    Unconditioned,
    /// `Γ_S`: uniform over `T` with `S` fixed.
    FixedS(IndexSet),
    /// `Γ_T`: uniform over `S` with `T` fixed.
    FixedT(IndexSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairDistribution {
    pub params: Params,
    pub seed: u64,
    pub conditioning: PairConditioning,
}

impl PairDistribution {
    pub fn uniform(params: Params, seed: u64) -> Self {
        PairDistribution { params, seed, conditioning: PairConditioning::Unconditioned }
    }
}

/// Draws the `index`-th valid pair of the stream keyed by `pd.seed`.
///
/// Sampling follows the staged process: pick the first set, pick the shared
/// coordinates inside it, then pick the remainder of the second set outside
/// it. Each stage is uniform, so the pair is uniform over the conditioned
/// support.
pub fn sample_valid_pair(pd: &PairDistribution, index: u64) -> Result<ValidPair, Error> {
    let params = &pd.params;
    params.validate()?;
    if !params.admits_valid_pair() {
        return Err(Error::ParameterInfeasible(format!(
            "no valid pair: |S ∪ T| = {} exceeds n = {}",
            params.max_support - params.overlap,
            params.n
        )));
    }
    let n = params.n;
    let half = params.half();
    let mut rng = rng::stream(pd.seed, Purpose::ValidPair, index);

    let first = match &pd.conditioning {
        PairConditioning::Unconditioned => IndexSet::from_indices(n, rand::seq::index::sample(&mut rng, n, half)),
        PairConditioning::FixedS(s) | PairConditioning::FixedT(s) => {
            if s.universe() != n || s.len() != half {
                return Err(Error::Structural(format!("fixed set must be a subset of [{n}] of size N/2 = {half}")));
            }
            s.clone()
        }
    };
    let inside: Vec<usize> = first.to_vec();
    let outside: Vec<usize> = (0..n).filter(|&i| !first.contains(i)).collect();
    let shared = rand::seq::index::sample(&mut rng, inside.len(), params.overlap).into_iter().map(|k| inside[k]);
    let rest = rand::seq::index::sample(&mut rng, outside.len(), half - params.overlap).into_iter().map(|k| outside[k]);
    let second = IndexSet::from_indices(n, shared.chain(rest));

    let (s, t) = match pd.conditioning {
        PairConditioning::FixedT(_) => (second, first),
        _ => (first, second),
    };
    ValidPair::new(s, t, params.clone())
}

/// `A_{S,T}(x)`: the support of `x` if `|x| ≤ N` and
/// (`|x∩T| ≤ ε_T·N` or `|x∩S| ≥ ε_S·N`), otherwise `∅`.
///
/// Membership of a coordinate means a non-zero value, so the same rule serves
/// both settings.
pub fn alloc_ast(x: &TypeProfile, inst: &ValidPair) -> Allocation {
    let support = x.support();
    let p = &inst.params;
    let served = support.len() <= p.max_support
        && (support.intersection_len(&inst.t) <= p.t_threshold || support.intersection_len(&inst.s) >= p.s_threshold);
    if served {
        Allocation::new(support)
    } else {
        Allocation::empty(x.n())
    }
}

/// Membership in the downward closure of `range(A_{S,T})`.
///
/// `R` is feasible iff `|R| ≤ N` and either `R` is itself returnable or it can
/// be padded with unused elements of `S` up to the `S` threshold without
/// exceeding `N`.
pub fn is_feasible(r: &Allocation, inst: &ValidPair) -> bool {
    let p = &inst.params;
    let served = r.served();
    let size = served.len();
    if size > p.max_support {
        return false;
    }
    let in_s = served.intersection_len(&inst.s);
    served.intersection_len(&inst.t) <= p.t_threshold || in_s >= p.s_threshold || size + (p.s_threshold - in_s) <= p.max_support
}

/// `A_{S,T}` as an oracle-ready rule.
#[derive(Debug, Clone)]
pub struct AdversarialRule {
    pub pair: ValidPair,
}

impl AllocationRule for AdversarialRule {
    fn allocate(&self, x: &TypeProfile, _seed: u64) -> Allocation {
        alloc_ast(x, &self.pair)
    }
}

/// The rule without hidden sets: serve the support whenever `|x| ≤ N`.
#[derive(Debug, Clone, Copy)]
pub struct CappedIdentityRule {
    pub max_support: usize,
}

impl AllocationRule for CappedIdentityRule {
    fn allocate(&self, x: &TypeProfile, _seed: u64) -> Allocation {
        let support = x.support();
        if support.len() <= self.max_support {
            Allocation::new(support)
        } else {
            Allocation::empty(x.n())
        }
    }
}
