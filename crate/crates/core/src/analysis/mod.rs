//! Welfare estimation, tail bounds and the attack experiment.

mod attack;
mod chernoff;
mod estimate;

pub use attack::{
    attack_experiment, attack_row, zeta, AttackConfig, ConditionalWelfare, ExperimentReport, IcSummary, OverlapTrial, QueryStats,
    RowStatus, WelfareMethod,
};
pub use chernoff::{binomial_upper_tail, chernoff_bound};
pub use estimate::{
    adversarial_welfare_exact, concentration_premise, expected_welfare_exact, expected_welfare_exact_with_limit, expected_welfare_mc,
    EstimateMethod, WelfareEstimate, EXACT_LIMIT_MULTI, EXACT_LIMIT_SINGLE,
};
