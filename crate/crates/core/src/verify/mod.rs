//! Verifiers for maximal-in-distributional-range and for BIC/DSIC
//! implementability through the matching characterization.

mod bic;
mod matching;
mod midr;

pub use bic::{build_matching_graph, check_bic_matching, check_bic_sweep, random_subsets, subsets_up_to, targeted_pairs, MatchingGraph};
pub use matching::max_weight_matching;
pub use midr::{check_midr, check_midr_at, check_midr_sweep};

use alloc::vec::Vec;

use crate::domain::TypeProfile;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Midr,
    Matching,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Reporting `deviation` instead of `truthful` raises the truthful type's welfare.
    Pair { truthful: TypeProfile, deviation: TypeProfile },
    /// A subset on which `matching[i]` (the outcome of type `matching[i]`
    /// given to type `i`) beats the identity.
    Matching { subset: Vec<TypeProfile>, matching: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationReport {
    pub kind: ViolationKind,
    pub witness: Witness,
    /// How much the deviation gains; always positive.
    pub slack: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Violation(ViolationReport),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn violation(&self) -> Option<&ViolationReport> {
        match self {
            Verdict::Pass => None,
            Verdict::Violation(v) => Some(v),
        }
    }

    /// Keeps whichever of the two has the larger slack; earlier wins ties.
    fn worst(self, other: Verdict) -> Verdict {
        match (&self, &other) {
            (_, Verdict::Pass) => self,
            (Verdict::Pass, _) => other,
            (Verdict::Violation(a), Verdict::Violation(b)) => {
                if b.slack > a.slack {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Results for a randomized rule: the seed-averaged verdict plus one per seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSweep {
    pub averaged: Verdict,
    pub per_seed: Vec<(u64, Verdict)>,
}

impl SeedSweep {
    /// Fraction of seeds whose deterministic realization passed.
    pub fn pass_fraction(&self) -> f64 {
        if self.per_seed.is_empty() {
            return 0.0;
        }
        self.per_seed.iter().filter(|(_, v)| v.passed()).count() as f64 / self.per_seed.len() as f64
    }
}
