use std::fmt::Write as _;

use adaptive_binpack::distributions::DistributionSpec;
use adaptive_binpack::harness::{
    capacity_sweep, emit_plot_data, reference, run_bench, type_sweep, write_csv_to,
    ExperimentGrid, GroupBy, OptReference, Source, TrialRecord,
};
use adaptive_binpack::oracle::{
    round_plan, solve_exact, solve_ffd, solve_fractional, Budget, FractionalOptions,
    IntegralPlan, OracleMode,
};
use adaptive_binpack::policy::{
    run_policy, LevelRule, OverflowOptions, OverflowOracle, PolicyKind, RunOptions, RunTrace,
};
use adaptive_binpack::rng::splitmix64;
use adaptive_binpack::theory::{
    estimate_ce, verify_prop1, verify_prop2, verify_prop3, verify_prop6,
};
use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{BenchArgs, CeArgs, Check, Globals, GroupArg, OracleArgs, RunArgs, VerifyArgs};
use crate::source::{read_instance, resolve};

const DEFAULT_SEED: u64 = 1;

fn budget(g: &Globals) -> Budget {
    Budget {
        max_millis: g.budget_ms,
        ..Budget::default()
    }
}

/// Writes to `--out` when given, else stdout.
fn emit(g: &Globals, text: &str) -> anyhow::Result<()> {
    match &g.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn plan_lines(out: &mut String, plan: &IntegralPlan) {
    for (id, b) in plan.bin_of.iter().enumerate() {
        writeln!(out, "{id} -> {b}").unwrap();
    }
}

pub fn oracle(g: &Globals, a: OracleArgs) -> anyhow::Result<bool> {
    let Some(path) = &a.instance else {
        bail!("oracle needs an instance file");
    };
    let inst = read_instance(path)?;
    let mode = a.mode.unwrap_or(OracleMode::Exact);
    let show_plan = a.plan.unwrap_or(false);
    let mut out = String::new();
    writeln!(out, "mode {mode}").unwrap();
    writeln!(out, "items {}", inst.len()).unwrap();
    writeln!(out, "capacity {}", inst.capacity()).unwrap();
    match mode {
        OracleMode::Exact => {
            let r = solve_exact(&inst, &budget(g))?;
            writeln!(out, "objective {}", r.bins()).unwrap();
            writeln!(out, "lower_bound {}", r.lower_bound).unwrap();
            writeln!(out, "optimal {}", r.optimal).unwrap();
            if show_plan {
                plan_lines(&mut out, &r.plan);
            }
        }
        OracleMode::Fractional => {
            let f = solve_fractional(&inst, &FractionalOptions::default())?;
            writeln!(out, "objective {:.9}", f.value).unwrap();
            writeln!(out, "lower_bound {:.9}", f.lower_bound).unwrap();
            writeln!(out, "converged {}", f.converged).unwrap();
            if show_plan {
                let sizes: Vec<String> = f.sizes.iter().map(|s| s.value().to_string()).collect();
                writeln!(out, "sizes {}", sizes.join(" ")).unwrap();
                for (c, w) in f.configs.iter().zip(&f.weights) {
                    let counts: Vec<String> = c.counts.iter().map(u32::to_string).collect();
                    writeln!(out, "{w:.9} x [{}]", counts.join(" ")).unwrap();
                }
            }
        }
        OracleMode::Ffd | OracleMode::Round => {
            let plan = if mode == OracleMode::Ffd {
                solve_ffd(&inst)
            } else {
                round_plan(&solve_fractional(&inst, &FractionalOptions::default())?, &inst)
            };
            writeln!(out, "objective {}", plan.num_bins()).unwrap();
            if show_plan {
                plan_lines(&mut out, &plan);
            }
        }
    }
    emit(g, &out)?;
    Ok(true)
}

#[derive(Serialize)]
struct RunReport<'a> {
    policy: PolicyKind,
    dist: String,
    #[serde(rename = "T")]
    t: usize,
    seed: u64,
    stop_at: Option<usize>,
    items: usize,
    bins: usize,
    opt_reference: OptReference,
    reference: adaptive_binpack::harness::Reference,
    regret: Option<f64>,
    loads: Vec<u64>,
    trace: &'a RunTrace,
}

fn overflow_options(g: &Globals, oracle: Option<OverflowOracle>) -> OverflowOptions {
    OverflowOptions {
        oracle: oracle.unwrap_or(OverflowOracle::Exact),
        budget: budget(g),
        ..OverflowOptions::default()
    }
}

/// Arrivals use `--seed` as is and the policy gets `splitmix64(seed)`, as in a
/// bench cell, so a CSV row's seed replays that trial.
pub fn run(g: &Globals, a: RunArgs) -> anyhow::Result<bool> {
    let source = resolve(&a.source, None)?;
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let t = match (&source, a.t) {
        (Source::Ground(gs), None) => gs.len(),
        (_, Some(t)) => t,
        (_, None) => bail!("--T is required unless a ground set is given"),
    };
    let arrivals = source.arrivals(t, seed)?;
    let policy = a.policy.unwrap_or(PolicyKind::Overflow);
    let opts = RunOptions {
        overflow: overflow_options(g, a.oracle),
        seed: splitmix64(seed),
        level_rule: a.level_rule.unwrap_or(LevelRule::Sample),
        stop_at: a.stop_at,
    };
    let r = run_policy(policy, &arrivals, t, &opts)?;
    let stop = a.stop_at.unwrap_or(t).min(t);
    let kind = a.opt_reference.unwrap_or_else(|| OptReference::default_for(&source, t));
    let re = reference(&arrivals.prefix(stop), kind, &budget(g), &FractionalOptions::default());
    let report = RunReport {
        policy,
        dist: source.label(),
        t,
        seed,
        stop_at: a.stop_at,
        items: r.items,
        bins: r.bins_used(),
        opt_reference: kind,
        regret: re.value.map(|v| r.bins_used() as f64 - v),
        reference: re,
        loads: r.state.bins().iter().map(|b| b.load).collect(),
        trace: &r.trace,
    };
    emit(g, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(true)
}

pub fn bench(g: &Globals, a: BenchArgs) -> anyhow::Result<bool> {
    let sources: Vec<Source> = match (&a.sweep_b, &a.sweep_j) {
        (Some(_), Some(_)) => bail!("--sweep-B and --sweep-J are exclusive"),
        (Some(bs), None) => bs.iter().map(|&b| Source::Distribution(capacity_sweep(b))).collect(),
        (None, Some(js)) => {
            let Some(b) = a.source.b else {
                bail!("--sweep-J needs --B");
            };
            js.iter().map(|&j| Source::Distribution(type_sweep(b, j))).collect()
        }
        (None, None) => vec![resolve(&a.source, Some("bounded-waste"))?],
    };
    let swept = sources.len() > 1 || a.sweep_b.is_some() || a.sweep_j.is_some();
    let mut records: Vec<TrialRecord> = Vec::new();
    for source in sources {
        let mut grid = ExperimentGrid::new(
            a.policies.clone().unwrap_or_else(|| PolicyKind::ALL.to_vec()),
            source,
            a.t.clone().unwrap_or_else(|| vec![10, 20, 50, 100]),
            a.trials.unwrap_or(10),
            g.seed.unwrap_or(DEFAULT_SEED),
        );
        grid.oracle = a.oracle.unwrap_or(OverflowOracle::Exact);
        grid.opt_reference = a.opt_reference;
        grid.budget = budget(g);
        grid.level_rule = a.level_rule.unwrap_or(LevelRule::Sample);
        grid.stop_at = a.stop_at;
        grid.record_runtime = a.record_runtime.unwrap_or(false);
        records.extend(run_bench(&grid)?);
    }
    let mut csv = Vec::new();
    write_csv_to(&records, &mut csv)?;
    emit(g, std::str::from_utf8(&csv)?)?;
    if let Some(path) = &a.plot {
        let by = match a.group_by {
            Some(GroupArg::T) => GroupBy::Horizon,
            Some(GroupArg::Dist) => GroupBy::Distribution,
            None if swept => GroupBy::Distribution,
            None => GroupBy::Horizon,
        };
        std::fs::write(path, emit_plot_data(&records, by))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(true)
}

fn verdict_line(check: &str, statistic: f64, bound: Option<f64>, pass: bool, report: Value) -> Value {
    json!({
        "check": check,
        "statistic": statistic,
        "bound": bound,
        "verdict": if pass { "pass" } else { "fail" },
        "report": report,
    })
}

fn ce_lines(dist: &DistributionSpec, ts: &[usize]) -> anyhow::Result<Vec<Value>> {
    let r = estimate_ce(dist, ts, &FractionalOptions::default())?;
    let mut lines = Vec::new();
    let mut prev = f64::INFINITY;
    for p in &r.points {
        // against the known limit when there is one, else only monotonicity
        let near = r.limit.is_none_or(|l| (p.ratio - l).abs() <= 2.0 / (p.t as f64).sqrt());
        let pass = near && p.ratio <= prev + 1e-6;
        prev = p.ratio;
        lines.push(verdict_line("ce", p.ratio, r.limit, pass, serde_json::to_value(p)?));
    }
    Ok(lines)
}

fn distribution_of(source: Source) -> anyhow::Result<DistributionSpec> {
    match source {
        Source::Distribution(d) => Ok(d),
        _ => bail!("this check needs a distribution, not a ground set"),
    }
}

/// One JSON line per point; false if any point fails.
pub fn verify(g: &Globals, a: VerifyArgs) -> anyhow::Result<bool> {
    let Some(check) = a.check else {
        bail!("verify needs --check");
    };
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let b = budget(g);
    let mut lines: Vec<Value> = Vec::new();
    match check {
        Check::Prop2 => {
            for n in a.n.clone().unwrap_or_else(|| vec![50, 200, 1000]) {
                let r = verify_prop2(n, a.trials.unwrap_or(10_000), seed);
                let pass = !r.violation && r.mean_q <= r.bound;
                lines.push(verdict_line("prop2", r.mean_q, Some(r.bound), pass, serde_json::to_value(&r)?));
            }
        }
        Check::Prop3 => {
            let dist = distribution_of(resolve(&a.source, Some("bounded-waste"))?)?;
            for t in a.t.clone().unwrap_or_else(|| vec![20, 50, 100]) {
                let r = verify_prop3(&dist, t, a.trials.unwrap_or(200), seed, &b)?;
                lines.push(verdict_line("prop3", r.mean_opt, Some(r.bound), !r.violation, serde_json::to_value(&r)?));
            }
        }
        Check::Prop6 => {
            let grounds = match resolve(&a.source, Some("pairs"))? {
                Source::Ground(gs) => vec![gs],
                Source::Family(f) => a.t.clone().unwrap_or_else(|| vec![64]).iter().map(|&t| f.ground_set(t)).collect(),
                Source::Distribution(_) => bail!("prop6 needs a ground set or a family"),
            };
            for gs in grounds {
                let n = gs.len().max(1);
                let ks: Vec<u32> = match a.k {
                    Some(k) => vec![k],
                    None => (0..=(usize::BITS - (n - 1).leading_zeros())).collect(),
                };
                for k in ks {
                    let r = verify_prop6(&gs, k, a.trials.unwrap_or(300), seed, &b)?;
                    lines.push(verdict_line("prop6", r.mean_opt, Some(r.bound), !r.violation, serde_json::to_value(&r)?));
                }
            }
        }
        Check::Prop1 => {
            let r = verify_prop1(a.trials.unwrap_or(200), seed, &b)?;
            let bad = (r.left_violations + r.right_violations) as f64;
            lines.push(verdict_line("prop1", bad, Some(0.0), !r.violation, serde_json::to_value(&r)?));
        }
        Check::Ce => {
            let dist = distribution_of(resolve(&a.source, Some("two-point"))?)?;
            lines = ce_lines(&dist, &a.t.clone().unwrap_or_else(|| vec![16, 64, 256, 1024]))?;
        }
    }
    let pass = lines.iter().all(|l| l["verdict"] == "pass");
    let mut out = String::new();
    for l in &lines {
        writeln!(out, "{l}").unwrap();
    }
    emit(g, &out)?;
    Ok(pass)
}

pub fn ce(g: &Globals, a: CeArgs) -> anyhow::Result<bool> {
    let dist = distribution_of(resolve(&a.source, Some("two-point"))?)?;
    let ts = a.t.unwrap_or_else(|| vec![16, 64, 256, 1024]);
    let r = estimate_ce(&dist, &ts, &FractionalOptions::default())?;
    emit(g, &(serde_json::to_string_pretty(&r)? + "\n"))?;
    Ok(true)
}
