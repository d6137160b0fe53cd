//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use itertools::Itertools;
use mechlab::config::CliOverrides;
use mechlab::suite::{Role, Suite};
use mechlab_core::adversarial::{alloc_ast, is_feasible, sample_valid_pair, AdversarialRule, PairDistribution, ValidPair};
use mechlab_core::analysis::{
    adversarial_welfare_exact, binomial_upper_tail, chernoff_bound, concentration_premise, expected_welfare_exact, expected_welfare_mc,
};
use mechlab_core::domain::{default_epsilon, enumerate_domain, welfare, Allocation, Params, PriorDistribution, Setting, TypeProfile};
use mechlab_core::transform::{FeasibilityMode, SeededMechanism, Transformation};
use mechlab_core::verify::{check_bic_matching, check_midr, max_weight_matching, subsets_up_to, Witness};
use mechlab_core::{big_to_f64, IndexSet, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

const N16: usize = 16;

fn params16() -> Params {
    Params::new(16, default_epsilon(), 6, 1, 2).unwrap()
}

fn pair16() -> ValidPair {
    ValidPair::new(IndexSet::from_indices(N16, [1, 2, 3]), IndexSet::from_indices(N16, [3, 4, 5]), params16()).unwrap()
}

fn case_evaluation(x: u64) -> u64 {
    let (s, t): (u64, u64) = (0b1110, 0b111000);
    let size = x.count_ones();
    let in_t = (x & t).count_ones();
    let in_s = (x & s).count_ones();
    if size <= 6 && (in_t <= 2 || in_s >= 2) {
        x
    } else {
        0
    }
}

fn profile16(m: u64) -> TypeProfile {
    TypeProfile::binary(&IndexSet::from_mask(N16, m))
}

fn ac1() -> Outcome {
    let pair = pair16();
    let start = Instant::now();
    let mismatches = (0u64..1 << N16).filter(|&x| alloc_ast(&profile16(x), &pair).served().to_mask() != Some(case_evaluation(x))).count();
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("{mismatches} mismatches over 65536 inputs in {:.2}s", elapsed.as_secs_f64()),
    )
}

fn ac2() -> Outcome {
    let pair = pair16();
    let range: BTreeSet<u64> = (0u64..1 << N16).map(case_evaluation).collect();
    let mut closure = vec![false; 1 << N16];
    for &r in &range {
        let mut sub = r;
        loop {
            closure[sub as usize] = true;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & r;
        }
    }
    let mismatches =
        (0u64..1 << N16).filter(|&m| is_feasible(&Allocation::new(IndexSet::from_mask(N16, m)), &pair) != closure[m as usize]).count();
    outcome(mismatches == 0, format!("{mismatches} mismatches over 65536 subsets, range has {} elements", range.len()))
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=7);
        let m: Vec<Vec<Rational>> =
            (0..k).map(|_| (0..k).map(|_| Rational::new(rng.random_range(0..100), rng.random_range(1..10))).collect()).collect();
        let brute = (0..k).permutations(k).map(|p| p.iter().enumerate().map(|(i, &j)| m[i][j]).sum::<Rational>()).max().unwrap();
        let (matching, weight) = max_weight_matching(&m);
        let realized: Rational = matching.iter().enumerate().map(|(i, &j)| m[i][j]).sum();
        if weight != brute || realized != weight {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over 1000 matrices up to 7x7"))
}

fn ac4() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (n, big_n) in [(6, 4), (8, 4), (10, 4), (12, 4)] {
        let params = Params::new(n, default_epsilon(), big_n, 1, 1).unwrap();
        let pair = sample_valid_pair(&PairDistribution::uniform(params.clone(), 9), 0).unwrap();
        let prior = PriorDistribution::new(params.clone(), Setting::SingleParameter, 9);
        let domain: Vec<TypeProfile> = enumerate_domain(n, Setting::SingleParameter, params.alpha).collect();
        for t in [Transformation::ExhaustiveMidr, Transformation::PresampledRange { q: 8 }] {
            for mode in [FeasibilityMode::RangeOnly, FeasibilityMode::DownwardClosedInference] {
                let mech = SeededMechanism::new(t, AdversarialRule { pair: pair.clone() }, prior.clone(), mode, None);
                checked += 1;
                if !check_midr(&mech, &domain, &[0, 1]).unwrap().passed() {
                    failures.push(format!("n={n} {t} {}", mode.as_str()));
                }
            }
        }
    }
    let prior = PriorDistribution::new(params16(), Setting::SingleParameter, 0);
    let mech =
        SeededMechanism::new(Transformation::PassThrough, AdversarialRule { pair: pair16() }, prior, FeasibilityMode::RangeOnly, None);
    let domain: Vec<TypeProfile> = (0u64..1 << N16).filter(|m| m.count_ones() <= 6).map(profile16).collect();
    let verdict = check_midr(&mech, &domain, &[0]).unwrap();
    let control = match verdict.violation() {
        Some(v) => match &v.witness {
            Witness::Pair { truthful, deviation } => {
                let own = welfare(truthful, &alloc_ast(truthful, &pair16())).unwrap();
                let dev = welfare(truthful, &alloc_ast(deviation, &pair16())).unwrap();
                (dev - own == v.slack && v.slack >= Rational::from_integer(1), v.slack)
            }
            Witness::Matching { .. } => (false, v.slack),
        },
        None => (false, Rational::from_integer(0)),
    };
    outcome(
        failures.is_empty() && control.0,
        format!("{} of {checked} max-in-range checks failed {failures:?}; pass-through slack {} (recomputed)", failures.len(), control.1),
    )
}

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut disagreements = 0;
    let mut passes = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=8);
        let size = rng.random_range(2..=4);
        let domain: Vec<TypeProfile> = (0..size)
            .map(|_| TypeProfile::new((0..n).map(|_| Rational::from_integer(rng.random_range(0..3))).collect(), Setting::MultiDimensional))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let table: BTreeMap<TypeProfile, Allocation> =
            domain.iter().map(|x| (x.clone(), Allocation::from_indices(n, (0..n).filter(|_| rng.random_bool(0.4))))).collect();
        let rule = |x: &TypeProfile, _: u64| table[x].clone();
        let matching = check_bic_matching(&rule, subsets_up_to(&domain, 2), &[0]).unwrap().passed();
        let w = |v: &TypeProfile, u: &TypeProfile| welfare(v, &table[u]).unwrap();
        let direct = domain.iter().tuple_combinations().all(|(v, u)| w(v, v) + w(u, u) >= w(v, u) + w(u, v));
        passes += usize::from(direct);
        disagreements += usize::from(matching != direct);
    }
    outcome(disagreements == 0, format!("{disagreements} disagreements over 10000 rules ({passes} weakly monotone)"))
}

fn ac6() -> Outcome {
    let suite = Suite::load(None, &CliOverrides::default()).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for f in suite.fixtures.iter().filter(|f| f.setting == Setting::SingleParameter) {
        let pair = sample_valid_pair(&PairDistribution::uniform(f.params.clone(), suite.spec.seed), 0).unwrap();
        let premise = big_to_f64(&concentration_premise(&pair));
        let mut welfare = adversarial_welfare_exact(&pair, Setting::SingleParameter);
        if f.params.n <= 16 {
            let prior = PriorDistribution::new(f.params.clone(), Setting::SingleParameter, 0);
            let enumerated = expected_welfare_exact(|x: &TypeProfile| alloc_ast(x, &pair), &prior).unwrap().exact.unwrap();
            let half = f.params.max_support / 2;
            let mut direct_premise = 0.0;
            let q = mechlab_core::to_f64(&f.params.activation_prob);
            for m in 0u64..1 << f.params.n {
                let x = IndexSet::from_mask(f.params.n, m);
                let k = x.len();
                if (half..=f.params.max_support).contains(&k) && x.intersection_len(pair.t()) <= f.params.t_threshold {
                    direct_premise += q.powi(k as i32) * (1.0 - q).powi((f.params.n - k) as i32);
                }
            }
            ok &= enumerated == welfare && (direct_premise - premise).abs() < 1e-9;
            welfare = enumerated;
        }
        let mean = big_to_f64(&welfare);
        let floor = f.params.max_support as f64 / 4.0;
        if premise >= 0.5 {
            ok &= mean >= floor;
        }
        lines.push(format!("{}: premise {premise:.3}, Wel {mean:.3} vs N/4 {floor}", f.name));
    }
    outcome(ok, lines.join("; "))
}

fn ac7() -> Outcome {
    let cases: [(u64, i64, i64, i64); 20] = [
        (64, 64, 3, 1),
        (64, 32, 6, 1),
        (10, 10, 3, 1),
        (20, 20, 3, 1),
        (100, 100, 3, 1),
        (100, 50, 6, 1),
        (100, 25, 12, 1),
        (50, 10, 15, 1),
        (30, 30, 4, 1),
        (30, 15, 7, 1),
        (200, 100, 6, 1),
        (200, 40, 15, 1),
        (16, 8, 7, 1),
        (40, 20, 13, 2),
        (12, 12, 7, 2),
        (500, 250, 7, 1),
        (64, 16, 13, 1),
        (1000, 1000, 4, 1),
        (80, 40, 13, 2),
        (25, 25, 3, 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 1_000_000u64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut ok = true;
    let mut failures = Vec::new();
    for (m, den, y_num, y_den) in cases {
        let p = Rational::new(1, den);
        let mean = Rational::from_integer(m as i64) * p;
        let y = Rational::new(y_num, y_den);
        let Ok(bound) = chernoff_bound(mean, y) else {
            ok = false;
            failures.push(format!("({m}, 1/{den}, {y}) rejected"));
            continue;
        };
        let exact = big_to_f64(&binomial_upper_tail(m as u32, p, y));
        ok &= exact <= bound;
        let dist = Binomial::new(m, 1.0 / den as f64).unwrap();
        let threshold = mechlab_core::to_f64(&y);
        let over = (0..trials).filter(|_| dist.sample(&mut rng) as f64 > threshold).count() as f64;
        let freq = over / trials as f64;
        let se = (bound * (1.0 - bound) / trials as f64).sqrt();
        ok &= freq <= bound + 3.0 * se;
        worst_excess = worst_excess.max((freq - bound) / se);
    }
    outcome(ok, format!("20 cases; largest Monte Carlo excess over the bound {worst_excess:.1} standard errors {failures:?}"))
}

fn ac8() -> Outcome {
    let pair = pair16();
    let prior = PriorDistribution::new(params16(), Setting::SingleParameter, 0);
    let truth = big_to_f64(&adversarial_welfare_exact(&pair, Setting::SingleParameter));
    let covered = (0..200u64)
        .filter(|&seed| expected_welfare_mc(|x: &TypeProfile| alloc_ast(x, &pair), &prior, 1000, 10_000 + seed).unwrap().covers(truth))
        .count();
    outcome(covered >= 180, format!("{covered}/200 intervals cover {truth:.6}"))
}

fn reproduce(out: &std::path::Path) -> (bool, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_mechlab")).arg("reproduce").arg("--out").arg(out).status().expect("run mechlab");
    (status.success(), start.elapsed())
}

fn ac9_ac10() -> (Outcome, Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let (ok_a, time_a) = reproduce(&a);
    let (ok_b, _) = reproduce(&b);
    let text = std::fs::read_to_string(&a).unwrap_or_default();
    let ladder: BTreeSet<String> = Suite::load(None, &CliOverrides::default())
        .unwrap()
        .fixtures
        .iter()
        .filter(|f| f.role == Role::Ladder)
        .map(|f| f.name.clone())
        .collect();
    let mut ratios = Vec::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["record"] == "ladder-point" && v["fixture"].as_str().is_some_and(|name| ladder.contains(name)) {
            ratios.push((v["n"].as_u64().unwrap(), v["mean_ratio"].as_f64()));
        }
    }
    ratios.sort_by_key(|r| r.0);
    let inversions = ratios
        .windows(2)
        .filter(|w| match (w[0].1, w[1].1) {
            (Some(x), Some(y)) => y > x,
            _ => true,
        })
        .count();
    let seq = ratios.iter().map(|(n, r)| format!("n={n}: {:.3}", r.unwrap_or(f64::NAN))).join(", ");
    let ac9 = outcome(
        ok_a && ratios.len() == 4 && inversions <= 1 && time_a < Duration::from_secs(600),
        format!("{seq}; {inversions} inversions; reproduce took {:.1}s", time_a.as_secs_f64()),
    );
    let bytes_a = std::fs::read(&a).unwrap_or_default();
    let bytes_b = std::fs::read(&b).unwrap_or_default();
    let ac10 = outcome(
        ok_a && ok_b && !bytes_a.is_empty() && bytes_a == bytes_b,
        format!("{} bytes per run, identical: {}", bytes_a.len(), bytes_a == bytes_b),
    );
    (ac9, ac10)
}

fn main() {
    let mut stdout = std::io::stdout();
    let mut report = |id: &str, name: &str, o: Outcome| -> bool {
        let _ = writeln!(stdout, "{id} {name}: {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        o.passed
    };
    let mut all = true;
    all &= report("AC1", "adversarial rule truth table", ac1());
    all &= report("AC2", "closed-form feasibility", ac2());
    all &= report("AC3", "matching engine", ac3());
    all &= report("AC4", "verifier soundness and completeness", ac4());
    all &= report("AC5", "two-subset consistency", ac5());
    all &= report("AC6", "welfare floor", ac6());
    all &= report("AC7", "Chernoff helper", ac7());
    all &= report("AC8", "Monte Carlo calibration", ac8());
    let (ac9, ac10) = ac9_ac10();
    all &= report("AC9", "degradation trend", ac9);
    all &= report("AC10", "determinism", ac10);
    if !all {
        std::process::exit(1);
    }
}
