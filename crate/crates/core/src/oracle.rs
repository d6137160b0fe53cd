//! Query-counted, budget-enforced, memoized access to an allocation rule.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::domain::{Allocation, TypeProfile};
use crate::Error;

/// A (possibly seeded) allocation rule `x ↦ A(x)`.
///
/// Randomized rules are realized as deterministic functions of an explicit
/// seed; deterministic rules ignore it.
pub trait AllocationRule {
    fn allocate(&self, x: &TypeProfile, seed: u64) -> Allocation;
}

impl<F> AllocationRule for F
where
    F: Fn(&TypeProfile, u64) -> Allocation,
{
    fn allocate(&self, x: &TypeProfile, seed: u64) -> Allocation {
        self(x, seed)
    }
}

/// One billed query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRecord {
    pub profile: TypeProfile,
    pub output: Allocation,
    /// Billed queries so far, including this one.
    pub cumulative: usize,
}

/// Black-box handle to a rule.
///
/// Only the first query at a profile is billed; repeats are answered from the
/// memo. Mutation goes through `&mut self`, so accounting is serialized by the
/// borrow checker; wrap the session in a lock to share it across threads.
#[derive(Debug, Clone)]
pub struct OracleSession<R> {
    rule: R,
    budget: Option<usize>,
    seed: u64,
    log: Vec<QueryRecord>,
    memo: BTreeMap<TypeProfile, usize>,
}

impl<R: AllocationRule> OracleSession<R> {
    /// `budget = None` means unlimited.
    pub fn new(rule: R, budget: Option<usize>, seed: u64) -> Self {
        OracleSession { rule, budget, seed, log: Vec::new(), memo: BTreeMap::new() }
    }

    /// Returns `A(x)`, billing one unit the first time `x` is seen.
    pub fn query(&mut self, x: &TypeProfile) -> Result<Allocation, Error> {
        if let Some(&k) = self.memo.get(x) {
            return Ok(self.log[k].output.clone());
        }
        if let Some(budget) = self.budget {
            if self.log.len() >= budget {
                return Err(Error::BudgetExceeded { budget });
            }
        }
        let output = self.rule.allocate(x, self.seed);
        self.memo.insert(x.clone(), self.log.len());
        self.log.push(QueryRecord { profile: x.clone(), output: output.clone(), cumulative: self.log.len() + 1 });
        Ok(output)
    }

    /// The memoized answer at `x`, if it has been billed already.
    pub fn cached(&self, x: &TypeProfile) -> Option<&Allocation> {
        self.memo.get(x).map(|&k| &self.log[k].output)
    }

    pub fn queries_used(&self) -> usize {
        self.log.len()
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn remaining(&self) -> Option<usize> {
        self.budget.map(|b| b - self.log.len())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    pub fn rule(&self) -> &R {
        &self.rule
    }

    /// Distinct outputs seen so far.
    pub fn observed_range(&self) -> BTreeSet<Allocation> {
        observed_range(&self.log)
    }
}

/// Distinct outputs appearing in a query log. `∅` is included only if it was observed.
pub fn observed_range(log: &[QueryRecord]) -> BTreeSet<Allocation> {
    log.iter().map(|r| r.output.clone()).collect()
}
