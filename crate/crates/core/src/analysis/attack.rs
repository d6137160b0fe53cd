use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::RngCore;

use super::estimate::{adversarial_welfare_exact, expected_welfare_exact, WelfareEstimate};
use crate::adversarial::{sample_valid_pair, AdversarialRule, PairConditioning, PairDistribution, ValidPair};
use crate::domain::{sample_profile_for, welfare_unchecked, Params, PriorDistribution, Setting, TypeProfile};
use crate::oracle::OracleSession;
use crate::rng::{self, Purpose};
use crate::transform::{run_or_fallback, FeasibilityMode, SeededMechanism, Transformation, TransformationContext};
use crate::verify::{check_bic_matching, check_midr, subsets_up_to, targeted_pairs, Verdict, ViolationKind};
use crate::{to_f64, Error, IndexSet, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WelfareMethod {
    Exact,
    MonteCarlo,
}

/// One attack run: which transformation, against which instance family, with
/// which seeds and sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub params: Params,
    pub setting: Setting,
    pub transformation: Transformation,
    pub mode: FeasibilityMode,
    pub budget: Option<usize>,
    /// Number of `(S, T) ∼ Γ` draws, one report row each.
    pub rows: usize,
    pub pair_seed: u64,
    pub prior_seed: u64,
    pub mechanism_seed: u64,
    /// Monte Carlo inputs per row.
    pub samples: usize,
    pub welfare_method: WelfareMethod,
    /// Prior draws added to `{T, S}` to form the incentive-check domain.
    pub ic_domain: usize,
    /// Accepted `T ∼ Γ_S` draws for the fixed-`S` overlap trial; 0 disables it.
    pub overlap_trials: usize,
}

impl AttackConfig {
    pub fn new(params: Params, setting: Setting, transformation: Transformation) -> Self {
        AttackConfig {
            params,
            setting,
            transformation,
            mode: FeasibilityMode::DownwardClosedInference,
            budget: None,
            rows: 4,
            pair_seed: 1,
            prior_seed: 2,
            mechanism_seed: 3,
            samples: 2000,
            welfare_method: WelfareMethod::MonteCarlo,
            ic_domain: 24,
            overlap_trials: 0,
        }
    }

    /// Transformation seed used for `row`.
    pub fn row_seed(&self, row: usize) -> u64 {
        self.mechanism_seed ^ (row as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    ParameterInfeasible(String),
    /// The budget ran out on at least one input; those inputs received `∅`.
    BudgetExceeded,
    Failed(String),
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::ParameterInfeasible(_) => "parameter-infeasible",
            RowStatus::BudgetExceeded => "budget-exceeded",
            RowStatus::Failed(_) => "failed",
        }
    }
}

/// Oracle answers consulted per input.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    /// Distinct profiles billed over the whole row.
    pub billed: usize,
}

/// Mechanism welfare on inputs `Z` with `|Z| ∈ [N/2, N]` and `|Z∩T| ≤ ε_T·N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalWelfare {
    pub estimate: Option<WelfareEstimate>,
    pub accepted: usize,
    pub proposed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcSummary {
    pub kind: ViolationKind,
    pub verdict: Verdict,
    pub domain_size: usize,
}

/// Welfare on a fixed input `x ⊃ S` when `T ∼ Γ_S` is conditioned on
/// `x ∩ T = S ∩ T`, realized by rejection sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTrial {
    pub input_size: usize,
    pub accepted: usize,
    pub proposed: usize,
    pub mean_welfare: f64,
    /// `4N(ε_T + ζ)/ε_ST`, the asymptotic ceiling for comparison.
    pub reference_bound: f64,
}

impl OverlapTrial {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub row: usize,
    pub mechanism_seed: u64,
    pub status: RowStatus,
    pub pair: Option<ValidPair>,
    pub welfare_alg: Option<WelfareEstimate>,
    pub welfare_mech: Option<WelfareEstimate>,
    pub ratio: Option<f64>,
    pub queries: Option<QueryStats>,
    pub cut_off_inputs: usize,
    /// `Wel(M, T)` on the input whose support is `T`.
    pub welfare_on_t: Option<Rational>,
    /// Whether, on input `T`, some consulted query `x` had `|A(x) ∩ T| > ε_T·N`.
    pub t_probe_hit: Option<bool>,
    pub conditional: Option<ConditionalWelfare>,
    pub ic: Option<IcSummary>,
    pub overlap_trial: Option<OverlapTrial>,
    /// `2·e^{n^ε}·e^{−ε_T·N/6}`, diagnostic only.
    pub zeta: f64,
}

impl ExperimentReport {
    fn empty(row: usize, mechanism_seed: u64, status: RowStatus, zeta: f64) -> Self {
        ExperimentReport {
            row,
            mechanism_seed,
            status,
            pair: None,
            welfare_alg: None,
            welfare_mech: None,
            ratio: None,
            queries: None,
            cut_off_inputs: 0,
            welfare_on_t: None,
            t_probe_hit: None,
            conditional: None,
            ic: None,
            overlap_trial: None,
            zeta,
        }
    }
}

/// `2·e^{n^ε}·e^{−ε_T·N/6}`, the failure-probability term of the lower-bound argument.
pub fn zeta(params: &Params) -> f64 {
    let n_eps = libm::pow(params.n as f64, to_f64(&params.epsilon));
    2.0 * libm::exp(n_eps) * libm::exp(-(params.t_threshold as f64) / 6.0)
}

fn indicator_profile(set: &IndexSet, setting: Setting) -> TypeProfile {
    TypeProfile::uniform_on(set, Rational::from_integer(1), setting)
}

/// Runs the rows of an attack sequentially. Rows are independent; see
/// [`attack_row`] to schedule them elsewhere.
pub fn attack_experiment(config: &AttackConfig) -> impl Iterator<Item = ExperimentReport> + '_ {
    (0..config.rows).map(move |row| attack_row(config, row))
}

/// Computes one report row. Failures become row statuses; nothing aborts.
pub fn attack_row(config: &AttackConfig, row: usize) -> ExperimentReport {
    let seed = config.row_seed(row);
    let z = zeta(&config.params);
    let pair = match sample_valid_pair(&PairDistribution::uniform(config.params.clone(), config.pair_seed), row as u64) {
        Ok(p) => p,
        Err(e) => return ExperimentReport::empty(row, seed, RowStatus::ParameterInfeasible(e.to_string()), z),
    };
    match run_row(config, row, seed, pair.clone(), z) {
        Ok(report) => report,
        Err(e) => {
            let status = match e {
                Error::ParameterInfeasible(_) => RowStatus::ParameterInfeasible(e.to_string()),
                other => RowStatus::Failed(other.to_string()),
            };
            ExperimentReport { pair: Some(pair), ..ExperimentReport::empty(row, seed, status, z) }
        }
    }
}

fn run_row(config: &AttackConfig, row: usize, seed: u64, pair: ValidPair, z: f64) -> Result<ExperimentReport, Error> {
    let params = &config.params;
    let rule = AdversarialRule { pair: pair.clone() };
    let prior = PriorDistribution::new(params.clone(), config.setting, config.prior_seed);
    let mut ctx = TransformationContext::new(OracleSession::new(rule.clone(), config.budget, seed), prior.clone(), config.mode, seed);
    let t_profile = indicator_profile(pair.t(), config.setting);
    let s_profile = indicator_profile(pair.s(), config.setting);

    // Probe input T first so the log holds exactly what that output relied on.
    let on_t = run_or_fallback(config.transformation, &mut ctx, &t_profile)?;
    let t_probe_hit = ctx.session.log().iter().any(|r| r.output.served().intersection_len(pair.t()) > params.t_threshold);
    let welfare_on_t = welfare_unchecked(&t_profile, &on_t.allocation);
    let mut cut_off_inputs = usize::from(on_t.cut_off);

    let welfare_alg = WelfareEstimate::exact(adversarial_welfare_exact(&pair, config.setting), 0);

    let sampler = prior.with_seed(config.prior_seed);
    let mut values = Vec::with_capacity(config.samples);
    let mut consulted = Vec::with_capacity(config.samples);
    let mut conditional = Vec::new();
    let mut ic_domain = alloc::vec![t_profile.clone(), s_profile];
    let half = params.half();
    for i in 0..config.samples as u64 {
        let x = sample_profile_for(&sampler, Purpose::MonteCarlo, i);
        let out = run_or_fallback(config.transformation, &mut ctx, &x)?;
        cut_off_inputs += usize::from(out.cut_off);
        consulted.push(out.consulted);
        let w = to_f64(&welfare_unchecked(&x, &out.allocation));
        values.push(w);
        let size = x.support_len();
        if (half..=params.max_support).contains(&size) && 2 * x.support().intersection_len(pair.t()) <= params.t_threshold {
            conditional.push(w);
        }
        if ic_domain.len() < config.ic_domain + 2 && !ic_domain.contains(&x) {
            ic_domain.push(x);
        }
    }
    let welfare_mech = match config.welfare_method {
        WelfareMethod::MonteCarlo => {
            if values.len() < 2 {
                return Err(Error::Structural("Monte Carlo welfare needs at least 2 samples".into()));
            }
            WelfareEstimate::from_samples(&values)
        }
        WelfareMethod::Exact => {
            let mut failure = None;
            let est = expected_welfare_exact(
                |x: &TypeProfile| match run_or_fallback(config.transformation, &mut ctx, x) {
                    Ok(out) => out.allocation,
                    Err(e) => {
                        failure.get_or_insert(e);
                        crate::domain::Allocation::empty(x.n())
                    }
                },
                &prior,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            est
        }
    };
    let ratio = (welfare_alg.mean > 0.0).then(|| welfare_mech.mean / welfare_alg.mean);
    let queries = (!consulted.is_empty()).then(|| QueryStats {
        min: *consulted.iter().min().unwrap(),
        max: *consulted.iter().max().unwrap(),
        mean: consulted.iter().sum::<usize>() as f64 / consulted.len() as f64,
        billed: ctx.session.queries_used(),
    });
    let conditional = ConditionalWelfare {
        accepted: conditional.len(),
        proposed: values.len(),
        estimate: (conditional.len() >= 2).then(|| WelfareEstimate::from_samples(&conditional)),
    };

    let ic = incentive_check(config, &rule, &prior, &pair, ic_domain, seed)?;
    let overlap_trial = if config.overlap_trials > 0 { Some(overlap_trial(config, row, seed, &pair, z)?) } else { None };

    Ok(ExperimentReport {
        row,
        mechanism_seed: seed,
        status: if cut_off_inputs > 0 { RowStatus::BudgetExceeded } else { RowStatus::Ok },
        pair: Some(pair),
        welfare_alg: Some(welfare_alg),
        welfare_mech: Some(welfare_mech),
        ratio,
        queries,
        cut_off_inputs,
        welfare_on_t: Some(welfare_on_t),
        t_probe_hit: Some(t_probe_hit),
        conditional: Some(conditional),
        ic: Some(ic),
        overlap_trial,
        zeta: z,
    })
}

/// MIDR over the sampled domain in the single-parameter setting; the matching
/// condition on all 2-subsets plus the `{x, α·T}` family otherwise.
fn incentive_check(
    config: &AttackConfig,
    rule: &AdversarialRule,
    prior: &PriorDistribution,
    pair: &ValidPair,
    domain: Vec<TypeProfile>,
    seed: u64,
) -> Result<IcSummary, Error> {
    let mech = SeededMechanism::new(config.transformation, rule.clone(), prior.clone(), config.mode, config.budget);
    let seeds = [seed];
    let domain_size = domain.len();
    let (kind, verdict) = match config.setting {
        Setting::SingleParameter => (ViolationKind::Midr, check_midr(&mech, &domain, &seeds)?),
        Setting::MultiDimensional => {
            let mut family: Vec<Vec<TypeProfile>> = subsets_up_to(&domain, 2).collect();
            family.extend(targeted_pairs(&domain, pair.t(), config.params.alpha));
            (ViolationKind::Matching, check_bic_matching(&mech, family, &seeds)?)
        }
    };
    Ok(IcSummary { kind, verdict, domain_size })
}

fn overlap_trial(config: &AttackConfig, row: usize, seed: u64, pair: &ValidPair, z: f64) -> Result<OverlapTrial, Error> {
    let params = &config.params;
    let n = params.n;
    let s = pair.s().clone();
    // x = S plus N/4 coordinates outside S, so |x| = 3N/4 ∈ [N/2, N].
    let outside: Vec<usize> = (0..n).filter(|&i| !s.contains(i)).collect();
    let mut rng = rng::stream(config.pair_seed, Purpose::Experiment, row as u64);
    let extra = params.max_support / 4;
    let mut x_set = s.clone();
    for k in rand::seq::index::sample(&mut rng, outside.len(), extra.min(outside.len())) {
        x_set.insert(outside[k]);
    }
    let x = indicator_profile(&x_set, config.setting);
    let conditioned = PairDistribution { params: params.clone(), seed: rng.next_u64(), conditioning: PairConditioning::FixedS(s.clone()) };
    let prior = PriorDistribution::new(params.clone(), config.setting, config.prior_seed);
    let max_proposals = config.overlap_trials * 1000;
    let (mut accepted, mut proposed, mut total) = (0usize, 0usize, 0.0f64);
    while accepted < config.overlap_trials && proposed < max_proposals {
        let candidate = sample_valid_pair(&conditioned, proposed as u64)?;
        proposed += 1;
        if !candidate.t().difference(&s).is_disjoint(&x_set) {
            continue;
        }
        accepted += 1;
        let rule = AdversarialRule { pair: candidate };
        let mut ctx = TransformationContext::new(OracleSession::new(rule, config.budget, seed), prior.clone(), config.mode, seed);
        let out = run_or_fallback(config.transformation, &mut ctx, &x)?;
        total += to_f64(&welfare_unchecked(&x, &out.allocation));
    }
    let big_n = params.max_support as f64;
    let reference_bound = 4.0 * big_n * (params.t_threshold as f64 + z * big_n) / params.overlap as f64;
    Ok(OverlapTrial {
        input_size: x_set.len(),
        accepted,
        proposed,
        mean_welfare: if accepted > 0 { total / accepted as f64 } else { 0.0 },
        reference_bound,
    })
}
