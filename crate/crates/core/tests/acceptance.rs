//! Acceptance checks, one PASS/FAIL line per criterion. With `ACCEPTANCE_STRICT`
//! set, any FAIL also makes the process exit nonzero.

use std::time::{Duration, Instant};

use adaptive_binpack::distributions::{DistributionSpec, Rational};
use adaptive_binpack::harness::{
    group_stats, named_source, run_bench, write_csv_to, ExperimentGrid, GroupBy, OptReference,
    Source, TrialRecord,
};
use adaptive_binpack::model::{Instance, Size};
use adaptive_binpack::oracle::{solve_exact, Budget, FractionalOptions};
use adaptive_binpack::policy::{
    run_policy, LevelRule, OverflowOptions, OverflowOracle, PolicyKind, RunOptions, RunTrace,
};
use adaptive_binpack::rng::{mix_seed, rng_from_seed};
use adaptive_binpack::theory::{
    estimate_ce, prop2_exact_mean_ratio, random_integer_instance, verify_prop1, verify_prop2,
    verify_prop6,
};

mod common;

const BASE_SEED: u64 = 20_240_601;

// criterion 1
const PROP2_NS: [usize; 3] = [50, 200, 1000];
const PROP2_TRIALS: usize = 10_000;
const PROP2_LIMIT: Duration = Duration::from_secs(30);

// criterion 2
const IDENTITY_RUNS: usize = 100;

// criterion 3
const UNIFORM_TS: [usize; 4] = [64, 128, 256, 512];
const UNIFORM_TRIALS: usize = 50;
const UNIFORM_MEAN_OVER_ROOT_T: f64 = 13.0;
const VOLUME_TS: [usize; 2] = [1024, 4096];
const VOLUME_TRIALS: usize = 20;
const VOLUME_MEAN_OVER_ROOT_T: f64 = 15.0;

// criterion 4
const PERMUTATION_TRIALS: usize = 50;
const PROP6_TRIALS: usize = 300;
const PROP6_MAX_TAU: usize = 16;

// criterion 5
const LEVEL_TS: [usize; 7] = [10, 20, 50, 100, 200, 500, 1000];
const LEVEL_TRIALS: usize = 30;

// criterion 6
const EXHAUSTIVE_CASES: usize = 200;
const SANDWICH_CASES: usize = 200;
const ORACLE_LIMIT: Duration = Duration::from_secs(120);

// criterion 7
const CE_TS: [usize; 5] = [16, 64, 256, 1024, 4096];
const CE_LIMIT: Duration = Duration::from_secs(60);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn ceil_log2(t: usize) -> f64 {
    (usize::BITS - (t.max(1) - 1).leading_zeros()) as f64
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn regrets(records: &[TrialRecord], policy: PolicyKind, t: usize) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.policy == policy.name() && r.t == t)
        .map(|r| r.regret.expect("every trial has a regret"))
        .collect()
}

fn prop2_bound() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for (i, &n) in PROP2_NS.iter().enumerate() {
        let r = verify_prop2(n, PROP2_TRIALS, mix_seed(BASE_SEED, i as u64));
        pass &= !r.violation && r.mean_q <= r.bound;
        notes.push(format!("N={n} mean={:.2} bound={:.2}", r.mean_q, r.bound));
    }
    // exhaustive enumeration of all balanced sign strings
    for n in 1..=5usize {
        let mut total = 0u64;
        let mut count = 0u64;
        for mask in 0u32..1 << (2 * n) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let q = (0..2 * n).fold(0i64, |q, i| (q + if mask >> i & 1 == 1 { 1 } else { -1 }).max(0));
            total += q as u64;
            count += 1;
        }
        let ok = prop2_exact_mean_ratio(n) == Rational::new(total, count);
        pass &= ok;
        if !ok {
            notes.push(format!("exact mean mismatch at N={n}"));
        }
    }
    notes.push("exact N<=5 agree".into());
    let elapsed = start.elapsed();
    pass &= elapsed < PROP2_LIMIT;
    Verdict::new(pass, format!("{}; {:.1}s", notes.join(", "), elapsed.as_secs_f64()))
}

/// Unmatched online items when each may take any slot at least its size: the
/// largest excess of items over slots among sizes `>= y`.
fn hall_deficiency(history: &[Size], online: &[Size]) -> usize {
    online
        .iter()
        .map(|&y| {
            let items = online.iter().filter(|&&x| x >= y).count();
            let slots = history.iter().filter(|&&x| x >= y).count();
            items.saturating_sub(slots)
        })
        .max()
        .unwrap_or(0)
}

fn pathwise_identity() -> Verdict {
    let names = [
        "bounded-waste",
        "perfectly-packable",
        "linear-waste",
        "uniform",
        "two-point",
        "pairs",
        "triples",
    ];
    let horizons = [7usize, 16, 33, 64, 100, 128, 181, 256];
    let mut phases = 0;
    let mut mismatches = Vec::new();
    for run in 0..IDENTITY_RUNS {
        let name = names[run % names.len()];
        let t = horizons[run % horizons.len()];
        let source = named_source(name).expect("known source");
        let seed = mix_seed(BASE_SEED, 1000 + run as u64);
        let arrivals = source.arrivals(t, seed).expect("arrivals");
        let oracle = if name == "uniform" {
            OverflowOracle::Approx
        } else {
            OverflowOracle::Exact
        };
        let opts = RunOptions {
            overflow: OverflowOptions {
                oracle,
                ..OverflowOptions::default()
            },
            ..RunOptions::default()
        };
        let r = run_policy(PolicyKind::Overflow, &arrivals, t, &opts).expect("run");
        let RunTrace::Overflow(trace) = &r.trace else {
            unreachable!("overflow runs carry their trace")
        };
        let mut opened = 1;
        for ph in &trace.phases {
            phases += 1;
            let h = &arrivals.sizes()[..ph.history];
            let online = &arrivals.sizes()[ph.history..ph.end];
            let want = hall_deficiency(h, online);
            if ph.overflow != want || ph.queue != want {
                mismatches.push(format!(
                    "{name} T={t} phase {}: overflow {} queue {} expected {want}",
                    ph.phase, ph.overflow, ph.queue
                ));
            }
            opened += ph.plan_bins_opened + ph.overflow;
        }
        if opened != r.bins_used() || r.state.validate(arrivals.sizes()).is_err() {
            mismatches.push(format!("{name} T={t}: bin accounting"));
        }
    }
    Verdict::new(
        mismatches.is_empty(),
        format!(
            "{IDENTITY_RUNS} runs, {phases} phases, {} mismatches{}",
            mismatches.len(),
            mismatches.first().map(|m| format!(" ({m})")).unwrap_or_default()
        ),
    )
}

fn uniform_grid(ts: &[usize], trials: usize, reference: OptReference) -> Vec<TrialRecord> {
    let mut g = ExperimentGrid::new(
        vec![PolicyKind::Overflow],
        Source::Distribution(DistributionSpec::Uniform),
        ts.to_vec(),
        trials,
        BASE_SEED,
    );
    g.oracle = OverflowOracle::Approx;
    g.opt_reference = Some(reference);
    run_bench(&g).expect("bench")
}

fn stochastic_regret() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    let records = uniform_grid(&UNIFORM_TS, UNIFORM_TRIALS, OptReference::Fractional);
    for &t in &UNIFORM_TS {
        let reg = regrets(&records, PolicyKind::Overflow, t);
        let (mean, _) = mean_and_stderr(&reg);
        let l = ceil_log2(t);
        let rhs = 10.0 * (t as f64).sqrt() + 2.0 * l.powi(3) + 13.0 * l * l + 43.0 * l + 13.0;
        let worst = reg.iter().copied().fold(f64::MIN, f64::max);
        let ratio = mean / (t as f64).sqrt();
        pass &= reg.len() == UNIFORM_TRIALS && ratio <= UNIFORM_MEAN_OVER_ROOT_T && worst <= rhs;
        notes.push(format!("T={t} mean/sqrtT={ratio:.2} max={worst} rhs={rhs:.0}"));
    }
    let records = uniform_grid(&VOLUME_TS, VOLUME_TRIALS, OptReference::Volume);
    for &t in &VOLUME_TS {
        let reg = regrets(&records, PolicyKind::Overflow, t);
        let (mean, _) = mean_and_stderr(&reg);
        let ratio = mean / (t as f64).sqrt();
        pass &= reg.len() == VOLUME_TRIALS && ratio <= VOLUME_MEAN_OVER_ROOT_T;
        notes.push(format!("T={t} volume mean/sqrtT={ratio:.2}"));
    }
    Verdict::new(pass, notes.join(", "))
}

fn permutation_regret() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for name in ["pairs", "triples"] {
        let source = named_source(name).expect("known source");
        let g = ExperimentGrid::new(
            vec![PolicyKind::Overflow],
            source.clone(),
            UNIFORM_TS.to_vec(),
            PERMUTATION_TRIALS,
            BASE_SEED,
        );
        let records = run_bench(&g).expect("bench");
        let mut worst_margin = f64::MIN;
        for &t in &UNIFORM_TS {
            let reg = regrets(&records, PolicyKind::Overflow, t);
            let l = ceil_log2(t);
            let rhs = 12.0 * (t as f64).sqrt() + 2.0 * l.powi(3) + 9.0 * l * l + 31.0 * l + 1.0;
            let exact = records
                .iter()
                .filter(|r| r.t == t)
                .all(|r| r.opt.is_some());
            pass &= reg.len() == PERMUTATION_TRIALS && exact && reg.iter().all(|&r| r <= rhs);
            worst_margin = worst_margin.max(reg.iter().copied().fold(f64::MIN, f64::max) / rhs);
        }
        notes.push(format!("{name} max regret/rhs={worst_margin:.3}"));
        let Source::Family(family) = source else {
            unreachable!("named ground sets are families")
        };
        let mut checks = 0;
        for &t in &[64usize, 256] {
            let ground = family.ground_set(t);
            for k in 0..=t.ilog2() {
                let tau = t.div_ceil(1 << k);
                if tau > PROP6_MAX_TAU {
                    continue;
                }
                let r = verify_prop6(&ground, k, PROP6_TRIALS, mix_seed(BASE_SEED, t as u64 + k as u64), &Budget::default())
                    .expect("prop6");
                pass &= !r.violation && r.inexact == 0;
                checks += 1;
            }
        }
        notes.push(format!("{name} prop6 {checks} checks clean"));
    }
    Verdict::new(pass, notes.join(", "))
}

fn level_grid(name: &str, policies: Vec<PolicyKind>, rule: LevelRule) -> Vec<TrialRecord> {
    let mut g = ExperimentGrid::new(
        policies,
        named_source(name).expect("known source"),
        LEVEL_TS.to_vec(),
        LEVEL_TRIALS,
        BASE_SEED,
    );
    g.level_rule = rule;
    run_bench(&g).expect("bench")
}

fn horizon_stat(records: &[TrialRecord], p: PolicyKind, t: usize) -> (f64, f64) {
    group_stats(records, GroupBy::Horizon)
        .iter()
        .find(|s| s.policy == p.name() && s.x == t.to_string())
        .map(|s| (s.mean, s.stderr))
        .expect("group present")
}

/// Judged on the level-LP policy as specified (sampled placement); the
/// deterministic mode rule is reported alongside for comparison.
fn level_lp_vs_ssq() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    let mut mode_notes = Vec::new();
    for name in ["bounded-waste", "perfectly-packable", "linear-waste"] {
        let records = level_grid(
            name,
            vec![PolicyKind::LpAdaptive, PolicyKind::SumOfSquares],
            LevelRule::Sample,
        );
        pass &= records.iter().all(|r| r.opt.is_some() && r.regret.is_some_and(|v| v >= 0.0));
        for t in [500, 1000] {
            let (lp, _) = horizon_stat(&records, PolicyKind::LpAdaptive, t);
            let (ss, _) = horizon_stat(&records, PolicyKind::SumOfSquares, t);
            pass &= lp <= ss;
            notes.push(format!("{name} T={t} lp={lp:.2} ssq={ss:.2}"));
        }
        if name == "bounded-waste" {
            let (m100, s100) = horizon_stat(&records, PolicyKind::LpAdaptive, 100);
            let (m1000, s1000) = horizon_stat(&records, PolicyKind::LpAdaptive, 1000);
            // three standard errors of the difference of the two means
            let band = 3.0 * (s100 * s100 + s1000 * s1000).sqrt();
            pass &= m1000 <= m100 + band;
            notes.push(format!("flat {m1000:.2} <= {m100:.2} + {band:.2}"));
        }
        let mode = level_grid(name, vec![PolicyKind::LpAdaptive], LevelRule::Mode);
        let (m100, _) = horizon_stat(&mode, PolicyKind::LpAdaptive, 100);
        let (m1000, _) = horizon_stat(&mode, PolicyKind::LpAdaptive, 1000);
        mode_notes.push(format!("{name} T=100 {m100:.2} T=1000 {m1000:.2}"));
    }
    Verdict::new(
        pass,
        format!("{}; mode rule: {}", notes.join(", "), mode_notes.join(", ")),
    )
}

fn oracle_correctness() -> Verdict {
    let start = Instant::now();
    let mut rng = rng_from_seed(mix_seed(BASE_SEED, 6));
    let mut mismatches = 0;
    for _ in 0..EXHAUSTIVE_CASES {
        let inst: Instance = random_integer_instance(&mut rng, 10, 30);
        let out = solve_exact(&inst, &Budget::default()).expect("exact");
        if !out.optimal || out.bins() != common::brute_force_opt(&inst) || out.plan.validate(&inst).is_err() {
            mismatches += 1;
        }
    }
    let r = verify_prop1(SANDWICH_CASES, mix_seed(BASE_SEED, 7), &Budget::default()).expect("sandwich");
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && !r.violation && r.inexact == 0 && elapsed < ORACLE_LIMIT;
    Verdict::new(
        pass,
        format!(
            "{mismatches} exhaustive mismatches, sandwich left {} right {} max gap {:.3} inexact {}; {:.1}s",
            r.left_violations,
            r.right_violations,
            r.max_gap,
            r.inexact,
            elapsed.as_secs_f64()
        ),
    )
}

fn ce_benchmark() -> Verdict {
    let start = Instant::now();
    let dist = DistributionSpec::two_point(Rational::new(1, 10)).expect("two-point");
    let r = estimate_ce(&dist, &CE_TS, &FractionalOptions::default()).expect("ce");
    let close = r
        .points
        .iter()
        .all(|p| (p.ratio - 0.5).abs() <= 2.0 / (p.t as f64).sqrt());
    let monotone = r.points.windows(2).all(|w| w[1].ratio <= w[0].ratio + 1e-6);
    let elapsed = start.elapsed();
    let ratios: Vec<String> = r.points.iter().map(|p| format!("{:.5}", p.ratio)).collect();
    Verdict::new(
        close && monotone && elapsed < CE_LIMIT,
        format!("ratios [{}]; {:.1}s", ratios.join(", "), elapsed.as_secs_f64()),
    )
}

fn determinism() -> Verdict {
    let grids: Vec<ExperimentGrid> = ["pairs", "bounded-waste", "uniform"]
        .into_iter()
        .map(|name| {
            ExperimentGrid::new(
                PolicyKind::ALL.to_vec(),
                named_source(name).expect("known source"),
                vec![20, 50],
                4,
                BASE_SEED,
            )
        })
        .collect();
    let render = || {
        let mut out = Vec::new();
        for g in &grids {
            write_csv_to(&run_bench(g).expect("bench"), &mut out).expect("csv");
        }
        out
    };
    let first = render();
    let second = render();
    Verdict::new(
        !first.is_empty() && first == second,
        format!("{} bytes, identical={}", first.len(), first == second),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("prop2-bound", prop2_bound),
        ("pathwise-identity", pathwise_identity),
        ("stochastic-regret", stochastic_regret),
        ("permutation-regret", permutation_regret),
        ("level-lp-vs-ssq", level_lp_vs_ssq),
        ("oracle-correctness", oracle_correctness),
        ("ce-benchmark", ce_benchmark),
        ("determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    // the lines above are the report; a failing criterion only fails the process on request
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
