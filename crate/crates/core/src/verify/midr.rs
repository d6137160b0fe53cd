use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_integer::Integer;

use super::{SeedSweep, Verdict, ViolationKind, ViolationReport, Witness};
use crate::domain::TypeProfile;
use crate::oracle::AllocationRule;
use crate::{Error, Rational};

/// Exact welfare table over a finite domain.
///
/// Values are rescaled by the lcm of their denominators and outcomes are
/// stored as per-index serve counts over the seeds, so every comparison is an
/// integer dot product.
struct MidrTable<'a> {
    domain: &'a [TypeProfile],
    seeds: usize,
    scale: i64,
    /// Sparse integer valuations: `(index, value · scale)`.
    values: Vec<Vec<(usize, i128)>>,
    /// Distinct outcome distributions as serve counts, with the first input producing each.
    outcomes: Vec<(Vec<u32>, usize)>,
    /// Outcome id chosen at each domain element.
    chosen: Vec<usize>,
}

impl<'a> MidrTable<'a> {
    fn build<R: AllocationRule + ?Sized>(rule: &R, domain: &'a [TypeProfile], seeds: &[u64]) -> Result<Self, Error> {
        let Some(first) = domain.first() else {
            return Err(Error::Structural("MIDR check needs a non-empty domain".into()));
        };
        if seeds.is_empty() {
            return Err(Error::Structural("MIDR check needs at least one seed".into()));
        }
        let n = first.n();
        if let Some(bad) = domain.iter().find(|v| v.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.n() });
        }
        let scale = domain.iter().flat_map(|v| v.values().iter()).fold(1i64, |acc, r| acc.lcm(r.denom()));
        let values = domain
            .iter()
            .map(|v| {
                v.values()
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| *r.numer() != 0)
                    .map(|(i, r)| (i, *r.numer() as i128 * (scale / *r.denom()) as i128))
                    .collect()
            })
            .collect();
        let mut ids: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        let mut outcomes = Vec::new();
        let mut chosen = Vec::with_capacity(domain.len());
        for (k, v) in domain.iter().enumerate() {
            let mut counts = vec![0u32; n];
            for &seed in seeds {
                let y = rule.allocate(v, seed);
                if y.n() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: y.n() });
                }
                for i in y.served().iter() {
                    counts[i] += 1;
                }
            }
            let id = *ids.entry(counts.clone()).or_insert_with(|| {
                outcomes.push((counts, k));
                outcomes.len() - 1
            });
            chosen.push(id);
        }
        Ok(MidrTable { domain, seeds: seeds.len(), scale, values, outcomes, chosen })
    }

    fn score(&self, v: usize, outcome: usize) -> i128 {
        let counts = &self.outcomes[outcome].0;
        self.values[v].iter().map(|&(i, val)| val * counts[i] as i128).sum()
    }

    /// Largest gain available to `v` by reporting some other domain element.
    fn worst_deviation(&self, v: usize) -> Option<(usize, i128)> {
        let own = self.score(v, self.chosen[v]);
        let ceiling: i128 = self.values[v].iter().map(|&(_, val)| val * self.seeds as i128).sum();
        if own == ceiling {
            return None;
        }
        let mut best: Option<(usize, i128)> = None;
        for o in 0..self.outcomes.len() {
            let gain = self.score(v, o) - own;
            if gain > 0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((o, gain));
            }
        }
        best
    }

    fn report(&self, v: usize, outcome: usize, gain: i128) -> ViolationReport {
        let denom = self.scale as i128 * self.seeds as i128;
        let slack = Rational::new(
            i64::try_from(gain).expect("slack numerator fits i64"),
            i64::try_from(denom).expect("slack denominator fits i64"),
        );
        ViolationReport {
            kind: ViolationKind::Midr,
            witness: Witness::Pair { truthful: self.domain[v].clone(), deviation: self.domain[self.outcomes[outcome].1].clone() },
            slack,
        }
    }
}

/// Checks `E_{y∼A(v)}[Wel(y,v)] ≥ E_{y∼A(v′)}[Wel(y,v)]` for all `v, v′` in `domain`.
///
/// The outcome distribution at each profile is the empirical one over
/// `seeds`. On failure the pair with the largest gain is returned.
pub fn check_midr<R: AllocationRule + ?Sized>(rule: &R, domain: &[TypeProfile], seeds: &[u64]) -> Result<Verdict, Error> {
    let table = MidrTable::build(rule, domain, seeds)?;
    let mut worst: Option<(usize, usize, i128)> = None;
    for v in 0..domain.len() {
        if let Some((o, gain)) = table.worst_deviation(v) {
            if worst.is_none_or(|(_, _, g)| gain > g) {
                worst = Some((v, o, gain));
            }
        }
    }
    Ok(match worst {
        None => Verdict::Pass,
        Some((v, o, gain)) => Verdict::Violation(table.report(v, o, gain)),
    })
}

/// The MIDR condition restricted to one truthful profile `focus`, which must
/// be an element of `domain`.
pub fn check_midr_at<R: AllocationRule + ?Sized>(
    rule: &R,
    domain: &[TypeProfile],
    seeds: &[u64],
    focus: &TypeProfile,
) -> Result<Verdict, Error> {
    let table = MidrTable::build(rule, domain, seeds)?;
    let v = domain.iter().position(|p| p == focus).ok_or_else(|| Error::Structural("focus profile is not in the domain".into()))?;
    Ok(match table.worst_deviation(v) {
        None => Verdict::Pass,
        Some((o, gain)) => Verdict::Violation(table.report(v, o, gain)),
    })
}

/// Seed-averaged verdict plus the verdict of each seed's deterministic realization.
pub fn check_midr_sweep<R: AllocationRule + ?Sized>(rule: &R, domain: &[TypeProfile], seeds: &[u64]) -> Result<SeedSweep, Error> {
    let averaged = check_midr(rule, domain, seeds)?;
    let per_seed = seeds.iter().map(|&s| Ok((s, check_midr(rule, domain, &[s])?))).collect::<Result<_, Error>>()?;
    Ok(SeedSweep { averaged, per_seed })
}
