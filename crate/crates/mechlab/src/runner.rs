//! Parallel execution of attack rows.

use mechlab_core::analysis::{attack_row, AttackConfig, ExperimentReport};
use rayon::prelude::*;

/// Runs every row of `config`; rows are independent, and the result is in row order.
pub fn run_rows(config: &AttackConfig) -> Vec<ExperimentReport> {
    (0..config.rows).into_par_iter().map(|row| attack_row(config, row)).collect()
}
