//! Black-box transformations: given oracle access to `A` and sample access to
//! the prior, emit an allocation for an input while only ever returning
//! outcomes certified feasible by what the oracle revealed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::str::FromStr;

use crate::domain::{domain_size, enumerate_domain, sample_profile_for, welfare_unchecked, Allocation, PriorDistribution, TypeProfile};
use crate::oracle::{AllocationRule, OracleSession};
use crate::rng::Purpose;
use crate::{Error, Rational};

/// Largest finite domain `ExhaustiveMidr` will walk.
pub const EXHAUSTIVE_DOMAIN_LIMIT: u128 = 1 << 22;

/// How a transformation may certify feasibility of an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeasibilityMode {
    /// Only outcomes the oracle actually returned.
    RangeOnly,
    /// Any subset of an observed outcome (the constraint is known to be downward-closed).
    DownwardClosedInference,
}

impl FeasibilityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeasibilityMode::RangeOnly => "range-only",
            FeasibilityMode::DownwardClosedInference => "downward-closed",
        }
    }
}

impl FromStr for FeasibilityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "range-only" => Ok(FeasibilityMode::RangeOnly),
            "downward-closed" => Ok(FeasibilityMode::DownwardClosedInference),
            other => Err(Error::Structural(alloc::format!("unknown feasibility mode `{other}`"))),
        }
    }
}

/// The catalog of baseline transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transformation {
    /// Always `∅`.
    EmptyAllocation,
    /// `A(x)` itself.
    PassThrough,
    /// Query the whole finite domain, return the welfare-best outcome.
    ExhaustiveMidr,
    /// Query `q` prior samples chosen by the context seed alone, then return
    /// the welfare-best outcome of that fixed range on every input.
    PresampledRange { q: usize },
}

impl Transformation {
    pub fn id(&self) -> &'static str {
        match self {
            Transformation::EmptyAllocation => "empty-allocation",
            Transformation::PassThrough => "pass-through",
            Transformation::ExhaustiveMidr => "exhaustive-midr",
            Transformation::PresampledRange { .. } => "presampled-range",
        }
    }

    /// Parses an id; `q` is used only by `presampled-range`.
    pub fn parse(id: &str, q: usize) -> Result<Self, Error> {
        match id {
            "empty-allocation" => Ok(Transformation::EmptyAllocation),
            "pass-through" => Ok(Transformation::PassThrough),
            "exhaustive-midr" => Ok(Transformation::ExhaustiveMidr),
            "presampled-range" => Ok(Transformation::PresampledRange { q }),
            other => Err(Error::Structural(alloc::format!("unknown transformation `{other}`"))),
        }
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transformation::PresampledRange { q } => write!(f, "presampled-range(q={q})"),
            t => f.write_str(t.id()),
        }
    }
}

/// Everything a transformation may use while computing one output.
#[derive(Debug, Clone)]
pub struct TransformationContext<R> {
    pub session: OracleSession<R>,
    pub prior: PriorDistribution,
    pub mode: FeasibilityMode,
    pub seed: u64,
    fixed_range: Option<(Transformation, Vec<Allocation>)>,
}

impl<R: AllocationRule> TransformationContext<R> {
    pub fn new(session: OracleSession<R>, prior: PriorDistribution, mode: FeasibilityMode, seed: u64) -> Self {
        TransformationContext { session, prior, mode, seed, fixed_range: None }
    }
}

/// An emitted allocation with its query audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismOutput {
    pub allocation: Allocation,
    /// Profiles billed against the budget during this run.
    pub audit: Vec<TypeProfile>,
    /// Distinct oracle answers the run depended on, billed or memoized.
    pub consulted: usize,
    /// Set when the budget ran out and `∅` was emitted instead.
    pub cut_off: bool,
}

/// Computes the transformation's output at `x`.
///
/// Deterministic in `(t, ctx fields, x)`. Budget exhaustion is returned as
/// [`Error::BudgetExceeded`]; [`run_or_fallback`] turns it into an `∅` output.
pub fn run<R: AllocationRule>(t: Transformation, ctx: &mut TransformationContext<R>, x: &TypeProfile) -> Result<MechanismOutput, Error> {
    if x.n() != ctx.prior.params.n {
        return Err(Error::DimensionMismatch { expected: ctx.prior.params.n, got: x.n() });
    }
    if x.setting() != ctx.prior.setting {
        return Err(Error::Structural(alloc::format!(
            "profile setting {:?} differs from the prior's {:?}",
            x.setting(),
            ctx.prior.setting
        )));
    }
    x.check_domain(&ctx.prior.params)?;
    let billed_before = ctx.session.queries_used();
    let (allocation, consulted) = match t {
        Transformation::EmptyAllocation => (Allocation::empty(x.n()), 0),
        Transformation::PassThrough => (ctx.session.query(x)?, 1),
        Transformation::ExhaustiveMidr | Transformation::PresampledRange { .. } => {
            let consulted = fixed_range(t, ctx)?;
            let range = &ctx.fixed_range.as_ref().expect("range populated").1;
            (best_response(x, range, ctx.mode), consulted)
        }
    };
    audit_feasibility(&allocation, &ctx.session, ctx.mode)?;
    let audit = ctx.session.log()[billed_before..].iter().map(|r| r.profile.clone()).collect();
    Ok(MechanismOutput { allocation, audit, consulted, cut_off: false })
}

/// Like [`run`], but a budget cut-off yields `∅` with `cut_off` set.
pub fn run_or_fallback<R: AllocationRule>(
    t: Transformation,
    ctx: &mut TransformationContext<R>,
    x: &TypeProfile,
) -> Result<MechanismOutput, Error> {
    let billed_before = ctx.session.queries_used();
    match run(t, ctx, x) {
        Err(Error::BudgetExceeded { .. }) => Ok(MechanismOutput {
            allocation: Allocation::empty(x.n()),
            audit: ctx.session.log()[billed_before..].iter().map(|r| r.profile.clone()).collect(),
            consulted: ctx.session.queries_used() - billed_before,
            cut_off: true,
        }),
        other => other,
    }
}

/// Populates the context's fixed range for `t`; returns how many profiles it spans.
fn fixed_range<R: AllocationRule>(t: Transformation, ctx: &mut TransformationContext<R>) -> Result<usize, Error> {
    let profiles: Vec<TypeProfile> = match t {
        Transformation::ExhaustiveMidr => {
            let params = &ctx.prior.params;
            let size = domain_size(params.n, ctx.prior.setting);
            if size > EXHAUSTIVE_DOMAIN_LIMIT {
                return Err(Error::DomainTooLarge { size, limit: EXHAUSTIVE_DOMAIN_LIMIT });
            }
            if matches!(&ctx.fixed_range, Some((cached, _)) if *cached == t) {
                return Ok(size as usize);
            }
            enumerate_domain(params.n, ctx.prior.setting, params.alpha).collect()
        }
        Transformation::PresampledRange { q } => {
            if matches!(&ctx.fixed_range, Some((cached, _)) if *cached == t) {
                return Ok(q);
            }
            let sampler = ctx.prior.with_seed(ctx.seed);
            (0..q as u64).map(|i| sample_profile_for(&sampler, Purpose::Presample, i)).collect()
        }
        _ => unreachable!("only range-based transformations have a fixed range"),
    };
    let mut outputs = Vec::with_capacity(profiles.len());
    for p in &profiles {
        outputs.push(ctx.session.query(p)?);
    }
    outputs.sort();
    outputs.dedup();
    ctx.fixed_range = Some((t, outputs));
    Ok(profiles.len())
}

/// Welfare-maximizing candidate for `x`, ties broken toward the
/// lexicographically smallest served set.
///
/// Under downward-closed inference each candidate is first trimmed to the
/// support of `x`, which keeps its welfare and is itself certified feasible.
/// `∅` is always a candidate.
pub fn best_response(x: &TypeProfile, range: &[Allocation], mode: FeasibilityMode) -> Allocation {
    let support = x.support();
    let mut best = Allocation::empty(x.n());
    let mut best_value = Rational::from_integer(0);
    for cand in range {
        let value = welfare_unchecked(x, cand);
        if value < best_value {
            continue;
        }
        let cand = match mode {
            FeasibilityMode::RangeOnly => cand.clone(),
            FeasibilityMode::DownwardClosedInference => Allocation::new(cand.served().intersection(&support)),
        };
        if value > best_value || cand < best {
            best = cand;
            best_value = value;
        }
    }
    best
}

fn audit_feasibility<R: AllocationRule>(y: &Allocation, session: &OracleSession<R>, mode: FeasibilityMode) -> Result<(), Error> {
    if y.is_empty() {
        return Ok(());
    }
    let certified = session.log().iter().any(|r| match mode {
        FeasibilityMode::RangeOnly => r.output == *y,
        FeasibilityMode::DownwardClosedInference => y.served().is_subset(r.output.served()),
    });
    if certified {
        Ok(())
    } else {
        Err(Error::Infeasible(alloc::format!("{:?} is not certified under {}", y.served(), mode.as_str())))
    }
}

/// A transformation applied to a fixed rule, exposed as a seeded allocation
/// rule so the verifiers can sweep seeds over it.
///
/// Each seed gets its own context (and oracle session), created on first use
/// and kept for later inputs.
pub struct SeededMechanism<R> {
    pub transformation: Transformation,
    pub rule: R,
    pub prior: PriorDistribution,
    pub mode: FeasibilityMode,
    pub budget: Option<usize>,
    contexts: RefCell<BTreeMap<u64, TransformationContext<R>>>,
}

impl<R: AllocationRule + Clone> SeededMechanism<R> {
    pub fn new(transformation: Transformation, rule: R, prior: PriorDistribution, mode: FeasibilityMode, budget: Option<usize>) -> Self {
        SeededMechanism { transformation, rule, prior, mode, budget, contexts: RefCell::new(BTreeMap::new()) }
    }

    /// Runs the mechanism realization for `seed` at `x`.
    pub fn output(&self, x: &TypeProfile, seed: u64) -> Result<MechanismOutput, Error> {
        let mut contexts = self.contexts.borrow_mut();
        let ctx = contexts.entry(seed).or_insert_with(|| {
            TransformationContext::new(OracleSession::new(self.rule.clone(), self.budget, seed), self.prior.clone(), self.mode, seed)
        });
        run_or_fallback(self.transformation, ctx, x)
    }

    /// Total distinct queries billed across all seeds.
    pub fn queries_billed(&self) -> usize {
        self.contexts.borrow().values().map(|c| c.session.queries_used()).sum()
    }
}

impl<R: AllocationRule + Clone> AllocationRule for SeededMechanism<R> {
    /// Panics if the transformation reports a non-budget error, which means
    /// the input is outside the prior's domain or the transformation is buggy.
    fn allocate(&self, x: &TypeProfile, seed: u64) -> Allocation {
        match self.output(x, seed) {
            Ok(out) => out.allocation,
            Err(e) => panic!("transformation {} failed: {e}", self.transformation),
        }
    }
}
