//! The `reproduce` suite: every fixture of a ladder file, run end to end.

use std::path::Path;

use mechlab_core::adversarial::{sample_valid_pair, AdversarialRule, PairDistribution, ValidPair};
use mechlab_core::analysis::{
    adversarial_welfare_exact, concentration_premise, AttackConfig, ExperimentReport, RowStatus, WelfareEstimate,
};
use mechlab_core::domain::{domain_size, enumerate_domain, welfare, Params, PriorDistribution, Setting, TypeProfile};
use mechlab_core::transform::{FeasibilityMode, SeededMechanism, Transformation};
use mechlab_core::verify::{check_midr, check_midr_at, check_midr_sweep, Witness};
use mechlab_core::{big_to_f64, IndexSet, Rational};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{CliError, SweepJson};
use crate::config::{read_to_string, setting_name, CliOverrides, ConfigError, ParamsSpec};
use crate::report::{rational, EstimateJson, PairJson, ParamsJson, RowJson, TransformationJson, ViolationJson};
use crate::runner::run_rows;

/// The ladder shipped with the crate.
pub const DEFAULT_LADDER: &str = include_str!("../fixtures/ladder.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Exhaustively verified.
    Small,
    /// Part of the welfare-ratio trend.
    Ladder,
    /// Attacked in the multi-dimensional setting.
    Multi,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub seed: u64,
    pub ladder_q: usize,
    pub ladder_rows: usize,
    pub ladder_samples: usize,
    pub ic_domain: usize,
    pub small_q: usize,
    pub small_seeds: usize,
    pub mode: String,
    #[serde(default)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct FixtureSpec {
    pub name: String,
    pub role: Role,
    pub overlap_dominates_density: bool,
    #[serde(flatten)]
    pub params: ParamsSpec,
}

#[derive(Debug, Clone, Deserialize)]
struct LadderFile {
    suite: SuiteSpec,
    fixture: Vec<FixtureSpec>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub role: Role,
    pub params: Params,
    pub setting: Setting,
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub spec: SuiteSpec,
    pub mode: FeasibilityMode,
    pub fixtures: Vec<Fixture>,
}

impl Suite {
    pub fn load(path: Option<&Path>, cli: &CliOverrides) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => read_to_string(p)?,
            None => DEFAULT_LADDER.to_string(),
        };
        Self::parse(&text, cli)
    }

    pub fn parse(text: &str, cli: &CliOverrides) -> Result<Self, ConfigError> {
        let file: LadderFile = toml::from_str(text)?;
        let mut spec = file.suite;
        if let Some(s) = cli.seed {
            spec.seed = s;
        }
        if let Some(s) = cli.samples {
            spec.ladder_samples = s;
        }
        if let Some(b) = cli.budget {
            spec.budget = Some(b);
        }
        if let Some(m) = &cli.mode {
            spec.mode = m.clone();
        }
        if spec.ladder_samples < 2 {
            return Err(ConfigError::Value { key: "ladder_samples", message: "needs at least 2 samples".into() });
        }
        let mode = spec.mode.parse().map_err(|e: mechlab_core::Error| ConfigError::Value { key: "mode", message: e.to_string() })?;
        let mut fixtures = Vec::new();
        for f in file.fixture {
            let params = f.params.params()?;
            if params.overlap_dominates_density() != f.overlap_dominates_density {
                return Err(ConfigError::Value {
                    key: "overlap_dominates_density",
                    message: format!(
                        "fixture `{}` declares {} but eps_ST_N / N > 2N / n is {}",
                        f.name, f.overlap_dominates_density, !f.overlap_dominates_density
                    ),
                });
            }
            if f.role == Role::Small && domain_size(params.n, f.params.setting.into()) > 4096 {
                return Err(ConfigError::Value {
                    key: "role",
                    message: format!("fixture `{}` is too large to verify exhaustively", f.name),
                });
            }
            fixtures.push(Fixture { name: f.name, role: f.role, params, setting: f.params.setting.into() });
        }
        Ok(Suite { spec, mode, fixtures })
    }
}

#[derive(Debug, Serialize)]
pub struct FixtureRecord {
    pub record: &'static str,
    pub fixture: String,
    pub role: Role,
    pub setting: &'static str,
    pub params: ParamsJson,
    pub overlap_dominates_density: bool,
    pub pair: PairJson,
    pub concentration_premise: f64,
    pub welfare_alg: EstimateJson,
    pub welfare_floor: f64,
    pub floor_applies: bool,
    pub floor_holds: bool,
}

#[derive(Debug, Serialize)]
pub struct MidrRecord {
    pub record: &'static str,
    pub fixture: String,
    pub transformation: TransformationJson,
    pub seeds: Vec<u64>,
    pub domain_size: usize,
    pub midr: SweepJson,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct ControlRecord {
    pub record: &'static str,
    pub fixture: String,
    pub transformation: TransformationJson,
    pub domain_size: usize,
    pub violation: Option<ViolationJson>,
    pub recomputed_slack: Option<String>,
    /// Whether the profile supported on `T` alone has a profitable deviation.
    pub violation_at_t: bool,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct LadderPoint {
    pub record: &'static str,
    pub fixture: String,
    pub n: usize,
    pub rows_ok: usize,
    pub mean_ratio: Option<f64>,
    pub mean_welfare_alg: Option<f64>,
    pub mean_welfare_mech: Option<f64>,
    pub probe_hit_rate: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct TrendRecord {
    pub record: &'static str,
    pub q: usize,
    pub ns: Vec<usize>,
    pub ratios: Vec<Option<f64>>,
    pub inversions: usize,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct SummaryRecord {
    pub record: &'static str,
    pub small_fixtures_midr: bool,
    pub pass_through_control: bool,
    pub welfare_floor: bool,
    pub trend: bool,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum SuiteRecord {
    Fixture(FixtureRecord),
    Midr(MidrRecord),
    Control(ControlRecord),
    Row(Box<RowJson>),
    Ladder(LadderPoint),
    Trend(TrendRecord),
    Summary(SummaryRecord),
}

impl SuiteRecord {
    pub fn passed(&self) -> Option<bool> {
        match self {
            SuiteRecord::Summary(s) => Some(s.passed),
            _ => None,
        }
    }
}

fn fixture_pair(f: &Fixture, seed: u64) -> Result<ValidPair, CliError> {
    Ok(sample_valid_pair(&PairDistribution::uniform(f.params.clone(), seed), 0)?)
}

fn fixture_record(f: &Fixture, seed: u64) -> Result<FixtureRecord, CliError> {
    let pair = fixture_pair(f, seed)?;
    let premise = big_to_f64(&concentration_premise(&pair));
    let welfare = WelfareEstimate::exact(
        adversarial_welfare_exact(&pair, f.setting),
        domain_size(f.params.n, f.setting).min(u64::MAX as u128) as u64,
    );
    let floor = f.params.max_support as f64 / 4.0;
    let floor_applies = premise >= 0.5;
    Ok(FixtureRecord {
        record: "fixture",
        fixture: f.name.clone(),
        role: f.role,
        setting: setting_name(f.setting),
        params: (&f.params).into(),
        overlap_dominates_density: f.params.overlap_dominates_density(),
        pair: (&pair).into(),
        concentration_premise: premise,
        welfare_floor: floor,
        floor_applies,
        floor_holds: !floor_applies || welfare.mean >= floor,
        welfare_alg: (&welfare).into(),
    })
}

fn small_midr(suite: &Suite, f: &Fixture, t: Transformation, mode: FeasibilityMode) -> Result<MidrRecord, CliError> {
    let pair = fixture_pair(f, suite.spec.seed)?;
    let prior = PriorDistribution::new(f.params.clone(), f.setting, suite.spec.seed);
    let mech = SeededMechanism::new(t, AdversarialRule { pair }, prior, mode, None);
    let domain: Vec<TypeProfile> = enumerate_domain(f.params.n, f.setting, f.params.alpha).collect();
    let seeds: Vec<u64> = (0..suite.spec.small_seeds as u64).map(|i| suite.spec.seed.wrapping_add(i)).collect();
    let sweep = check_midr_sweep(&mech, &domain, &seeds)?;
    Ok(MidrRecord {
        record: "midr",
        fixture: f.name.clone(),
        transformation: TransformationJson::new(t, mode, None),
        seeds,
        domain_size: domain.len(),
        passed: sweep.averaged.passed() && sweep.per_seed.iter().all(|(_, v)| v.passed()),
        midr: (&sweep).into(),
    })
}

/// `PassThrough` on the `n = 16` fixture over all profiles with `|x| ≤ N`
/// must show a MIDR violation of slack at least 1.
fn pass_through_control(suite: &Suite, f: &Fixture) -> Result<ControlRecord, CliError> {
    let pair = fixture_pair(f, suite.spec.seed)?;
    let prior = PriorDistribution::new(f.params.clone(), f.setting, suite.spec.seed);
    let t = Transformation::PassThrough;
    let mech = SeededMechanism::new(t, AdversarialRule { pair: pair.clone() }, prior, FeasibilityMode::RangeOnly, None);
    let n = f.params.n;
    let t_profile = TypeProfile::binary(pair.t());
    let domain: Vec<TypeProfile> = (0u64..1 << n)
        .filter(|m| m.count_ones() as usize <= f.params.max_support)
        .map(|m| TypeProfile::binary(&IndexSet::from_mask(n, m)))
        .collect();
    let verdict = check_midr(&mech, &domain, &[0])?;
    let violation_at_t = !check_midr_at(&mech, &domain, &[0], &t_profile)?.passed();
    let recomputed = match verdict.violation().map(|v| &v.witness) {
        Some(Witness::Pair { truthful, deviation }) => {
            let own = welfare(truthful, &mech.output(truthful, 0)?.allocation)?;
            let dev = welfare(truthful, &mech.output(deviation, 0)?.allocation)?;
            Some(dev - own)
        }
        _ => None,
    };
    let passed = match (verdict.violation(), recomputed) {
        (Some(v), Some(r)) => v.slack >= Rational::from_integer(1) && r == v.slack,
        _ => false,
    };
    Ok(ControlRecord {
        record: "pass-through-control",
        fixture: f.name.clone(),
        transformation: TransformationJson::new(t, FeasibilityMode::RangeOnly, None),
        domain_size: domain.len(),
        violation: verdict.violation().map(ViolationJson::from),
        recomputed_slack: recomputed.as_ref().map(rational),
        violation_at_t,
        passed,
    })
}

fn attack_config(suite: &Suite, f: &Fixture) -> AttackConfig {
    let q = suite.spec.ladder_q;
    let mut c = AttackConfig::new(f.params.clone(), f.setting, Transformation::PresampledRange { q });
    c.mode = suite.mode;
    c.budget = Some(suite.spec.budget.unwrap_or(q));
    c.rows = suite.spec.ladder_rows;
    c.pair_seed = suite.spec.seed;
    c.prior_seed = suite.spec.seed;
    c.mechanism_seed = suite.spec.seed;
    c.samples = suite.spec.ladder_samples;
    c.ic_domain = suite.spec.ic_domain;
    c
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn ladder_point(f: &Fixture, rows: &[ExperimentReport]) -> LadderPoint {
    let ok: Vec<&ExperimentReport> = rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
    LadderPoint {
        record: "ladder-point",
        fixture: f.name.clone(),
        n: f.params.n,
        rows_ok: ok.len(),
        mean_ratio: mean(ok.iter().filter_map(|r| r.ratio)),
        mean_welfare_alg: mean(ok.iter().filter_map(|r| r.welfare_alg.as_ref().map(|e| e.mean))),
        mean_welfare_mech: mean(ok.iter().filter_map(|r| r.welfare_mech.as_ref().map(|e| e.mean))),
        probe_hit_rate: mean(ok.iter().filter_map(|r| r.t_probe_hit.map(|h| if h { 1.0 } else { 0.0 }))),
    }
}

/// Adjacent pairs where the ratio rises; a missing ratio counts as a rise.
pub fn inversions(ratios: &[Option<f64>]) -> usize {
    ratios
        .windows(2)
        .filter(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b > a,
            _ => true,
        })
        .count()
}

/// Runs the whole suite and returns its records in a fixed order.
pub fn reproduce(suite: &Suite) -> Result<Vec<SuiteRecord>, CliError> {
    let mut records = Vec::new();
    let mut floor_ok = true;
    for f in &suite.fixtures {
        let r = fixture_record(f, suite.spec.seed)?;
        floor_ok &= r.floor_holds;
        records.push(SuiteRecord::Fixture(r));
    }

    let mut jobs = Vec::new();
    for f in suite.fixtures.iter().filter(|f| f.role == Role::Small) {
        for t in [Transformation::ExhaustiveMidr, Transformation::PresampledRange { q: suite.spec.small_q }] {
            for mode in [FeasibilityMode::RangeOnly, FeasibilityMode::DownwardClosedInference] {
                jobs.push((f, t, mode));
            }
        }
    }
    let midr: Vec<MidrRecord> = jobs.par_iter().map(|&(f, t, mode)| small_midr(suite, f, t, mode)).collect::<Result<_, _>>()?;
    let midr_ok = midr.iter().all(|r| r.passed);
    records.extend(midr.into_iter().map(SuiteRecord::Midr));

    let mut control_ok = false;
    if let Some(f) = suite.fixtures.iter().find(|f| f.params.n == 16 && f.setting == Setting::SingleParameter) {
        let c = pass_through_control(suite, f)?;
        control_ok = c.passed;
        records.push(SuiteRecord::Control(c));
    }

    let mut ns = Vec::new();
    let mut ratios = Vec::new();
    for f in suite.fixtures.iter().filter(|f| matches!(f.role, Role::Ladder | Role::Multi)) {
        let config = attack_config(suite, f);
        let rows = run_rows(&config);
        for r in &rows {
            let mut row = RowJson::new(&config, r);
            row.fixture = Some(f.name.clone());
            records.push(SuiteRecord::Row(Box::new(row)));
        }
        let point = ladder_point(f, &rows);
        if f.role == Role::Ladder {
            ns.push(f.params.n);
            ratios.push(point.mean_ratio);
        }
        records.push(SuiteRecord::Ladder(point));
    }
    let inv = inversions(&ratios);
    let trend_ok = !ratios.is_empty() && inv <= 1;
    records.push(SuiteRecord::Trend(TrendRecord {
        record: "trend",
        q: suite.spec.ladder_q,
        ns,
        ratios,
        inversions: inv,
        passed: trend_ok,
    }));
    records.push(SuiteRecord::Summary(SummaryRecord {
        record: "summary",
        small_fixtures_midr: midr_ok,
        pass_through_control: control_ok,
        welfare_floor: floor_ok,
        trend: trend_ok,
        passed: midr_ok && control_ok && floor_ok && trend_ok,
    }));
    Ok(records)
}
