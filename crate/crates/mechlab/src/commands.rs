//! The `verify`, `welfare`, `attack` and `params` subcommands.

use std::path::Path;

use mechlab_core::adversarial::{AdversarialRule, CappedIdentityRule, ValidPair};
use mechlab_core::analysis::{
    adversarial_welfare_exact, expected_welfare_exact, expected_welfare_mc, zeta, WelfareEstimate, WelfareMethod,
};
use mechlab_core::domain::{domain_size, enumerate_domain, Allocation, Params, Setting, TypeProfile};
use mechlab_core::oracle::{AllocationRule, OracleSession};
use mechlab_core::transform::{run_or_fallback, SeededMechanism, TransformationContext};
use mechlab_core::verify::{check_bic_sweep, check_midr_sweep, random_subsets, subsets_up_to, targeted_pairs, SeedSweep};
use mechlab_core::IndexSet;
use serde::Serialize;

use crate::config::{setting_name, Config, ConfigError};
use crate::report::{
    write_csv, write_jsonl, EstimateJson, InstanceJson, PairJson, ParamsJson, QueryJson, RowCsv, RowJson, TransformationJson, VerdictJson,
};
use crate::runner::run_rows;

/// Domains up to this size are verified in full.
pub const FULL_DOMAIN_LIMIT: u128 = 4096;
/// Single-parameter domains restricted to `|x| ≤ N` are verified in full up to this size.
pub const CAPPED_DOMAIN_LIMIT: u128 = 1 << 16;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(#[from] mechlab_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Writes JSON lines to `path`, or to stdout when no path is given.
pub fn emit<T: Serialize>(path: Option<&Path>, records: &[T]) -> Result<(), CliError> {
    match path {
        Some(p) => write_jsonl(std::io::BufWriter::new(std::fs::File::create(p)?), records)?,
        None => write_jsonl(std::io::stdout().lock(), records)?,
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RuleName {
    /// The adversarial rule on the configured (or first sampled) pair.
    Adversarial,
    /// Serve the support whenever it has at most `N` elements.
    CappedIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CheckName {
    Midr,
    Matching,
    Both,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Full,
    /// All profiles with at most `N` active coordinates.
    Capped,
    Sampled,
}

fn capped_count(n: usize, cap: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for k in 0..=cap.min(n) {
        total += binom;
        binom = binom * (n - k) as u128 / (k + 1) as u128;
    }
    total
}

/// The verification domain: `T` and `S` first, then the full domain when it is
/// small, the `|x| ≤ N` slice when that is small, or prior draws.
pub fn verify_domain(config: &Config, pair: &ValidPair) -> (DomainKind, Vec<TypeProfile>) {
    let p = &config.params;
    let one = mechlab_core::Rational::from_integer(1);
    let head = vec![TypeProfile::uniform_on(pair.t(), one, config.setting), TypeProfile::uniform_on(pair.s(), one, config.setting)];
    let mut domain = head.clone();
    let kind = if domain_size(p.n, config.setting) <= FULL_DOMAIN_LIMIT {
        domain.extend(enumerate_domain(p.n, config.setting, p.alpha).filter(|x| !head.contains(x)));
        DomainKind::Full
    } else if config.setting == Setting::SingleParameter && p.n <= 24 && capped_count(p.n, p.max_support) <= CAPPED_DOMAIN_LIMIT {
        domain.extend(
            (0u64..1 << p.n)
                .filter(|m| m.count_ones() as usize <= p.max_support)
                .map(|m| TypeProfile::binary(&IndexSet::from_mask(p.n, m)))
                .filter(|x| !head.contains(x)),
        );
        DomainKind::Capped
    } else {
        let prior = config.prior();
        for k in 0..config.experiment.samples as u64 {
            let x = prior.sample(k);
            if !domain.contains(&x) {
                domain.push(x);
            }
        }
        DomainKind::Sampled
    };
    (kind, domain)
}

#[derive(Debug, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct SweepJson {
    pub averaged: VerdictJson,
    pub per_seed_pass_fraction: f64,
    pub per_seed: Vec<SeedResult>,
}

impl From<&SeedSweep> for SweepJson {
    fn from(s: &SeedSweep) -> Self {
        SweepJson {
            averaged: (&s.averaged).into(),
            per_seed_pass_fraction: s.pass_fraction(),
            per_seed: s.per_seed.iter().map(|(seed, v)| SeedResult { seed: *seed, passed: v.passed() }).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DomainJson {
    pub kind: DomainKind,
    pub size: usize,
}

#[derive(Debug, Serialize)]
pub struct VerifyJson {
    pub record: &'static str,
    pub rule: &'static str,
    pub instance: InstanceJson,
    pub transformation: TransformationJson,
    pub seeds: Vec<u64>,
    pub domain: DomainJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub midr: Option<SweepJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<SweepJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<usize>,
    pub queries_billed: usize,
    pub passed: bool,
}

fn instance_json(config: &Config, pair: Option<&ValidPair>) -> InstanceJson {
    InstanceJson { params: (&config.params).into(), setting: setting_name(config.setting), pair: pair.map(PairJson::from) }
}

fn verify_with<R: AllocationRule + Clone>(
    config: &Config,
    rule: R,
    rule_name: &'static str,
    pair: &ValidPair,
    check: CheckName,
) -> Result<VerifyJson, CliError> {
    let e = &config.experiment;
    let t = config.transformation()?;
    let mode = config.mode()?;
    let mech = SeededMechanism::new(t, rule, config.prior(), mode, e.budget);
    let seeds: Vec<u64> = (0..e.seeds.max(1) as u64).map(|i| config.mechanism_seed().wrapping_add(i)).collect();
    let (kind, domain) = verify_domain(config, pair);
    let midr = match check {
        CheckName::Midr | CheckName::Both => Some(check_midr_sweep(&mech, &domain, &seeds)?),
        CheckName::Matching => None,
    };
    let (matching, subsets) = match check {
        CheckName::Matching | CheckName::Both => {
            let small = &domain[..domain.len().min(e.ic_domain + 2)];
            let mut family: Vec<Vec<TypeProfile>> = subsets_up_to(small, e.subset_size).collect();
            if config.setting == Setting::MultiDimensional {
                family.extend(targeted_pairs(small, pair.t(), config.params.alpha));
            }
            family.extend(random_subsets(&config.prior(), e.random_subsets, e.subset_size, config.seed));
            let count = family.len();
            (Some(check_bic_sweep(&mech, family, &seeds)?), Some(count))
        }
        CheckName::Midr => (None, None),
    };
    let passed = midr.as_ref().is_none_or(|s| s.averaged.passed()) && matching.as_ref().is_none_or(|s| s.averaged.passed());
    Ok(VerifyJson {
        record: "verify",
        rule: rule_name,
        instance: instance_json(config, Some(pair)),
        transformation: TransformationJson::new(t, mode, e.budget),
        seeds,
        domain: DomainJson { kind, size: domain.len() },
        midr: midr.as_ref().map(SweepJson::from),
        matching: matching.as_ref().map(SweepJson::from),
        subsets,
        queries_billed: mech.queries_billed(),
        passed,
    })
}

/// Verifies the configured transformation applied to `rule`. Returns whether every check passed.
pub fn verify(config: &Config, rule: RuleName, check: CheckName, out: Option<&Path>) -> Result<bool, CliError> {
    let pair = config.pair()?;
    let report = match rule {
        RuleName::Adversarial => verify_with(config, AdversarialRule { pair: pair.clone() }, "adversarial", &pair, check)?,
        RuleName::CappedIdentity => {
            verify_with(config, CappedIdentityRule { max_support: config.params.max_support }, "capped-identity", &pair, check)?
        }
    };
    let passed = report.passed;
    emit(out, &[report])?;
    Ok(passed)
}

#[derive(Debug, Serialize)]
pub struct WelfareJson {
    pub record: &'static str,
    pub rule: &'static str,
    pub instance: InstanceJson,
    pub transformation: TransformationJson,
    pub welfare_alg: EstimateJson,
    pub welfare_mech: EstimateJson,
    pub ratio: Option<f64>,
    pub queries_billed: usize,
    pub cut_off_inputs: usize,
}

fn estimate<F: FnMut(&TypeProfile) -> Allocation>(config: &Config, method: WelfareMethod, rule: F) -> Result<WelfareEstimate, CliError> {
    Ok(match method {
        WelfareMethod::Exact => expected_welfare_exact(rule, &config.prior())?,
        WelfareMethod::MonteCarlo => expected_welfare_mc(rule, &config.prior(), config.experiment.samples, config.seed)?,
    })
}

fn welfare_with<R: AllocationRule + Clone>(
    config: &Config,
    rule: R,
    rule_name: &'static str,
    pair: &ValidPair,
    query_log: Option<&Path>,
) -> Result<WelfareJson, CliError> {
    let method = config.welfare_method()?;
    let t = config.transformation()?;
    let mode = config.mode()?;
    let welfare_alg = match rule_name {
        "adversarial" => {
            WelfareEstimate::exact(adversarial_welfare_exact(pair, config.setting), domain_size(config.params.n, config.setting) as u64)
        }
        _ => estimate(config, method, |x| rule.allocate(x, 0))?,
    };
    let seed = config.mechanism_seed();
    let mut ctx = TransformationContext::new(OracleSession::new(rule, config.experiment.budget, seed), config.prior(), mode, seed);
    let mut failure = None;
    let mut cut_off_inputs = 0;
    let welfare_mech = estimate(config, method, |x| match run_or_fallback(t, &mut ctx, x) {
        Ok(out) => {
            cut_off_inputs += usize::from(out.cut_off);
            out.allocation
        }
        Err(e) => {
            failure.get_or_insert(e);
            Allocation::empty(x.n())
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    if let Some(path) = query_log {
        let log: Vec<QueryJson> = ctx.session.log().iter().map(QueryJson::from).collect();
        emit(Some(path), &log)?;
    }
    Ok(WelfareJson {
        record: "welfare",
        rule: rule_name,
        instance: instance_json(config, Some(pair)),
        transformation: TransformationJson::new(t, mode, config.experiment.budget),
        ratio: (welfare_alg.mean > 0.0).then(|| welfare_mech.mean / welfare_alg.mean),
        welfare_alg: (&welfare_alg).into(),
        welfare_mech: (&welfare_mech).into(),
        queries_billed: ctx.session.queries_used(),
        cut_off_inputs,
    })
}

/// Estimates the welfare of the rule and of the transformed mechanism.
pub fn welfare(config: &Config, rule: RuleName, out: Option<&Path>, query_log: Option<&Path>) -> Result<bool, CliError> {
    let pair = config.pair()?;
    let report = match rule {
        RuleName::Adversarial => welfare_with(config, AdversarialRule { pair: pair.clone() }, "adversarial", &pair, query_log)?,
        RuleName::CappedIdentity => {
            welfare_with(config, CappedIdentityRule { max_support: config.params.max_support }, "capped-identity", &pair, query_log)?
        }
    };
    emit(out, &[report])?;
    Ok(true)
}

/// Runs the attack experiment. Fails the check when any row's incentive check finds a violation.
pub fn attack(config: &Config, out: Option<&Path>, csv_path: Option<&Path>) -> Result<bool, CliError> {
    let attack = config.attack_config()?;
    let rows: Vec<RowJson> = run_rows(&attack).iter().map(|r| RowJson::new(&attack, r)).collect();
    emit(out, &rows)?;
    if let Some(path) = csv_path {
        let flat: Vec<RowCsv> = rows.iter().map(RowCsv::from).collect();
        write_csv(std::fs::File::create(path)?, &flat)?;
    }
    Ok(rows.iter().all(|r| r.ic.as_ref().is_none_or(|ic| ic.verdict.passed)))
}

#[derive(Debug, Serialize)]
pub struct ParamsReport {
    pub record: &'static str,
    pub params: ParamsJson,
    /// Whether `ε_ST > 2N/n`, the density condition behind the probing bound.
    pub overlap_dominates_density: bool,
    pub admits_valid_pair: bool,
    pub zeta: f64,
}

impl From<&Params> for ParamsReport {
    fn from(p: &Params) -> Self {
        ParamsReport {
            record: "params",
            params: p.into(),
            overlap_dominates_density: p.overlap_dominates_density(),
            admits_valid_pair: p.admits_valid_pair(),
            zeta: zeta(p),
        }
    }
}

pub fn params(p: &Params, out: Option<&Path>) -> Result<bool, CliError> {
    emit(out, &[ParamsReport::from(p)])?;
    Ok(true)
}
