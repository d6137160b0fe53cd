//! JSON and CSV shapes for everything the CLI writes.

use std::io::Write;

use mechlab_core::adversarial::ValidPair;
use mechlab_core::analysis::{EstimateMethod, ExperimentReport, WelfareEstimate};
use mechlab_core::domain::{Params, Setting, TypeProfile};
use mechlab_core::oracle::QueryRecord;
use mechlab_core::transform::{FeasibilityMode, Transformation};
use mechlab_core::verify::{Verdict, ViolationKind, ViolationReport, Witness};
use mechlab_core::{big_to_f64, Rational};
use serde::Serialize;

use crate::config::setting_name;

pub fn rational(r: &Rational) -> String {
    r.to_string()
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct ParamsJson {
    pub n: usize,
    pub epsilon: String,
    pub N: usize,
    pub eps_ST_N: usize,
    pub eps_S_N: usize,
    pub eps_T_N: usize,
    pub alpha: String,
    pub bernoulli_q: String,
}

impl From<&Params> for ParamsJson {
    fn from(p: &Params) -> Self {
        ParamsJson {
            n: p.n,
            epsilon: rational(&p.epsilon),
            N: p.max_support,
            eps_ST_N: p.overlap,
            eps_S_N: p.s_threshold,
            eps_T_N: p.t_threshold,
            alpha: rational(&p.alpha),
            bernoulli_q: rational(&p.activation_prob),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct PairJson {
    pub S: Vec<usize>,
    pub T: Vec<usize>,
}

impl From<&ValidPair> for PairJson {
    fn from(p: &ValidPair) -> Self {
        PairJson { S: p.s().to_vec(), T: p.t().to_vec() }
    }
}

/// A profile as its support, plus the non-unit values in the multi-dimensional setting.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileJson {
    pub support: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

impl From<&TypeProfile> for ProfileJson {
    fn from(x: &TypeProfile) -> Self {
        let support = x.support().to_vec();
        let values = (x.setting() == Setting::MultiDimensional).then(|| support.iter().map(|&i| rational(&x.values()[i])).collect());
        ProfileJson { support, values }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum WitnessJson {
    Pair { truthful: ProfileJson, deviation: ProfileJson },
    Matching { subset: Vec<ProfileJson>, matching: Vec<usize> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationJson {
    pub kind: &'static str,
    pub witness: WitnessJson,
    pub slack: String,
}

impl From<&ViolationReport> for ViolationJson {
    fn from(v: &ViolationReport) -> Self {
        let witness = match &v.witness {
            Witness::Pair { truthful, deviation } => WitnessJson::Pair { truthful: truthful.into(), deviation: deviation.into() },
            Witness::Matching { subset, matching } => {
                WitnessJson::Matching { subset: subset.iter().map(ProfileJson::from).collect(), matching: matching.clone() }
            }
        };
        ViolationJson { kind: kind_name(v.kind), witness, slack: rational(&v.slack) }
    }
}

pub fn kind_name(k: ViolationKind) -> &'static str {
    match k {
        ViolationKind::Midr => "midr",
        ViolationKind::Matching => "matching",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<ViolationJson>,
}

impl From<&Verdict> for VerdictJson {
    fn from(v: &Verdict) -> Self {
        VerdictJson { passed: v.passed(), violation: v.violation().map(ViolationJson::from) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateJson {
    pub method: &'static str,
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
}

impl From<&WelfareEstimate> for EstimateJson {
    fn from(e: &WelfareEstimate) -> Self {
        EstimateJson {
            method: match e.method {
                EstimateMethod::Exact => "exact",
                EstimateMethod::MonteCarlo => "monte-carlo",
            },
            mean: e.mean,
            exact: e.exact.as_ref().map(|r| r.to_string()),
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            samples: e.samples,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformationJson {
    pub id: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub mode: &'static str,
    pub budget: Option<usize>,
}

impl TransformationJson {
    pub fn new(t: Transformation, mode: FeasibilityMode, budget: Option<usize>) -> Self {
        let q = match t {
            Transformation::PresampledRange { q } => Some(q),
            _ => None,
        };
        TransformationJson { id: t.id(), q, mode: mode.as_str(), budget }
    }
}

/// One billed oracle query.
#[derive(Debug, Clone, Serialize)]
pub struct QueryJson {
    pub profile: Vec<usize>,
    pub output: Vec<usize>,
    pub cumulative: usize,
}

impl From<&QueryRecord> for QueryJson {
    fn from(r: &QueryRecord) -> Self {
        QueryJson { profile: r.profile.support().to_vec(), output: r.output.served().to_vec(), cumulative: r.cumulative }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueriesJson {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub billed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateJson>,
    pub accepted: usize,
    pub proposed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IcJson {
    pub kind: &'static str,
    pub domain_size: usize,
    #[serde(flatten)]
    pub verdict: VerdictJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapTrialJson {
    pub input_size: usize,
    pub accepted: usize,
    pub proposed: usize,
    pub acceptance_rate: f64,
    pub mean_welfare: f64,
    pub reference_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceJson {
    pub params: ParamsJson,
    pub setting: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowJson {
    pub record: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    pub row: usize,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status_detail: Option<String>,
    pub instance: InstanceJson,
    pub transformation: TransformationJson,
    pub seeds: SeedsJson,
    pub welfare_alg: Option<EstimateJson>,
    pub welfare_mech: Option<EstimateJson>,
    pub ratio: Option<f64>,
    pub queries_per_input: Option<QueriesJson>,
    pub cut_off_inputs: usize,
    pub welfare_on_t: Option<String>,
    pub t_probe_hit: Option<bool>,
    pub conditional: Option<ConditionalJson>,
    pub ic: Option<IcJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_trial: Option<OverlapTrialJson>,
    pub zeta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedsJson {
    pub pair: u64,
    pub prior: u64,
    pub mechanism: u64,
}

impl RowJson {
    pub fn new(config: &mechlab_core::analysis::AttackConfig, r: &ExperimentReport) -> Self {
        use mechlab_core::analysis::RowStatus;
        let status_detail = match &r.status {
            RowStatus::ParameterInfeasible(m) | RowStatus::Failed(m) => Some(m.clone()),
            _ => None,
        };
        RowJson {
            record: "attack-row",
            fixture: None,
            row: r.row,
            status: r.status.as_str(),
            status_detail,
            instance: InstanceJson {
                params: (&config.params).into(),
                setting: setting_name(config.setting),
                pair: r.pair.as_ref().map(PairJson::from),
            },
            transformation: TransformationJson::new(config.transformation, config.mode, config.budget),
            seeds: SeedsJson { pair: config.pair_seed, prior: config.prior_seed, mechanism: r.mechanism_seed },
            welfare_alg: r.welfare_alg.as_ref().map(EstimateJson::from),
            welfare_mech: r.welfare_mech.as_ref().map(EstimateJson::from),
            ratio: r.ratio,
            queries_per_input: r.queries.as_ref().map(|q| QueriesJson { min: q.min, max: q.max, mean: q.mean, billed: q.billed }),
            cut_off_inputs: r.cut_off_inputs,
            welfare_on_t: r.welfare_on_t.as_ref().map(rational),
            t_probe_hit: r.t_probe_hit,
            conditional: r.conditional.as_ref().map(|c| ConditionalJson {
                estimate: c.estimate.as_ref().map(EstimateJson::from),
                accepted: c.accepted,
                proposed: c.proposed,
            }),
            ic: r.ic.as_ref().map(|ic| IcJson { kind: kind_name(ic.kind), domain_size: ic.domain_size, verdict: (&ic.verdict).into() }),
            overlap_trial: r.overlap_trial.as_ref().map(|t| OverlapTrialJson {
                input_size: t.input_size,
                accepted: t.accepted,
                proposed: t.proposed,
                acceptance_rate: t.acceptance_rate(),
                mean_welfare: t.mean_welfare,
                reference_bound: t.reference_bound,
            }),
            zeta: r.zeta,
        }
    }
}

/// Flat attack-row columns for CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RowCsv {
    pub row: usize,
    pub status: &'static str,
    pub n: usize,
    #[serde(rename = "N")]
    pub max_support: usize,
    pub setting: &'static str,
    pub transformation: &'static str,
    pub q: Option<usize>,
    pub mode: &'static str,
    pub welfare_alg: Option<f64>,
    pub welfare_mech: Option<f64>,
    pub ratio: Option<f64>,
    pub queries_mean: Option<f64>,
    pub queries_max: Option<usize>,
    pub t_probe_hit: Option<bool>,
    pub conditional_mean: Option<f64>,
    pub ic_passed: Option<bool>,
    pub zeta: f64,
}

impl From<&RowJson> for RowCsv {
    fn from(r: &RowJson) -> Self {
        RowCsv {
            row: r.row,
            status: r.status,
            n: r.instance.params.n,
            max_support: r.instance.params.N,
            setting: r.instance.setting,
            transformation: r.transformation.id,
            q: r.transformation.q,
            mode: r.transformation.mode,
            welfare_alg: r.welfare_alg.as_ref().map(|e| e.mean),
            welfare_mech: r.welfare_mech.as_ref().map(|e| e.mean),
            ratio: r.ratio,
            queries_mean: r.queries_per_input.as_ref().map(|q| q.mean),
            queries_max: r.queries_per_input.as_ref().map(|q| q.max),
            t_probe_hit: r.t_probe_hit,
            conditional_mean: r.conditional.as_ref().and_then(|c| c.estimate.as_ref()).map(|e| e.mean),
            ic_passed: r.ic.as_ref().map(|ic| ic.verdict.passed),
            zeta: r.zeta,
        }
    }
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, records: &[T]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_csv<W: Write, T: Serialize>(out: W, records: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn big_mean(e: &WelfareEstimate) -> f64 {
    e.exact.as_ref().map(big_to_f64).unwrap_or(e.mean)
}
