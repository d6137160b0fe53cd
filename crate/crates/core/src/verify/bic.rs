use alloc::vec::Vec;
use itertools::Itertools;
use num_traits::Zero;
use rand::RngCore;

use super::matching::max_weight_matching;
use super::{SeedSweep, Verdict, ViolationKind, ViolationReport, Witness};
use crate::domain::{sample_profile_for, welfare, PriorDistribution, Setting, TypeProfile};
use crate::oracle::AllocationRule;
use crate::rng::{self, Purpose};
use crate::{Error, IndexSet, Rational};

/// The bipartite graph `G(D′)`: `weights[v][w] = E_{z∼A(w)}[v·z]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingGraph {
    pub types: Vec<TypeProfile>,
    pub weights: Vec<Vec<Rational>>,
}

impl MatchingGraph {
    pub fn identity_weight(&self) -> Rational {
        (0..self.types.len()).fold(Rational::zero(), |acc, i| acc + self.weights[i][i])
    }
}

/// Builds `G(subset)` with outcomes averaged over `seeds`.
pub fn build_matching_graph<R: AllocationRule + ?Sized>(rule: &R, subset: &[TypeProfile], seeds: &[u64]) -> Result<MatchingGraph, Error> {
    if seeds.is_empty() {
        return Err(Error::Structural("matching graph needs at least one seed".into()));
    }
    let per_seed = Rational::new(1, seeds.len() as i64);
    let outcomes: Vec<Vec<_>> = subset.iter().map(|w| seeds.iter().map(|&s| rule.allocate(w, s)).collect()).collect();
    let mut weights = Vec::with_capacity(subset.len());
    for v in subset {
        let mut row = Vec::with_capacity(subset.len());
        for outs in &outcomes {
            let mut total = Rational::zero();
            for z in outs {
                total += welfare(v, z)?;
            }
            row.push(total * per_seed);
        }
        weights.push(row);
    }
    Ok(MatchingGraph { types: subset.to_vec(), weights })
}

/// Checks that the identity is a maximum-weight matching of `G(D′)` for every
/// provided subset `D′`. Ties pass. Returns the subset with the largest gap.
pub fn check_bic_matching<R, I>(rule: &R, subsets: I, seeds: &[u64]) -> Result<Verdict, Error>
where
    R: AllocationRule + ?Sized,
    I: IntoIterator<Item = Vec<TypeProfile>>,
{
    let mut verdict = Verdict::Pass;
    for subset in subsets {
        let graph = build_matching_graph(rule, &subset, seeds)?;
        let (matching, best) = max_weight_matching(&graph.weights);
        let slack = best - graph.identity_weight();
        if slack > Rational::zero() {
            let report = ViolationReport { kind: ViolationKind::Matching, witness: Witness::Matching { subset, matching }, slack };
            verdict = verdict.worst(Verdict::Violation(report));
        }
    }
    Ok(verdict)
}

/// Seed-averaged verdict plus one verdict per seed. The subset family is
/// materialized once and reused.
pub fn check_bic_sweep<R, I>(rule: &R, subsets: I, seeds: &[u64]) -> Result<SeedSweep, Error>
where
    R: AllocationRule + ?Sized,
    I: IntoIterator<Item = Vec<TypeProfile>>,
{
    let subsets: Vec<_> = subsets.into_iter().collect();
    let averaged = check_bic_matching(rule, subsets.iter().cloned(), seeds)?;
    let per_seed =
        seeds.iter().map(|&s| Ok((s, check_bic_matching(rule, subsets.iter().cloned(), &[s])?))).collect::<Result<_, Error>>()?;
    Ok(SeedSweep { averaged, per_seed })
}

/// Every subset of `domain` with between 2 and `k` elements.
pub fn subsets_up_to(domain: &[TypeProfile], k: usize) -> impl Iterator<Item = Vec<TypeProfile>> + '_ {
    (2..=k.min(domain.len())).flat_map(move |size| domain.iter().cloned().combinations(size))
}

/// `count` subsets drawn from the prior, each of uniform size in `[2, k]`.
pub fn random_subsets(prior: &PriorDistribution, count: usize, k: usize, seed: u64) -> Vec<Vec<TypeProfile>> {
    let k = k.max(2);
    let sampler = prior.with_seed(seed);
    let mut next = 0u64;
    (0..count as u64)
        .map(|j| {
            let mut rng = rng::stream(seed, Purpose::SubsetFamily, j);
            let size = 2 + (rng.next_u64() % (k as u64 - 1)) as usize;
            (0..size)
                .map(|_| {
                    next += 1;
                    sample_profile_for(&sampler, Purpose::SubsetMembers, next - 1)
                })
                .collect()
        })
        .collect()
}

/// The targeted family `{x, α·T}` for each `x`.
pub fn targeted_pairs(xs: &[TypeProfile], t: &IndexSet, alpha: Rational) -> Vec<Vec<TypeProfile>> {
    let high = TypeProfile::uniform_on(t, alpha, Setting::MultiDimensional);
    xs.iter().map(|x| alloc::vec![x.clone(), high.clone()]).collect()
}
