//! Browser bindings. Every export takes plain strings and numbers and returns
//! a JSON string; `www/index.html` draws the results.

use adaptive_binpack::harness::{group_stats, named_source, run_bench, ExperimentGrid, GroupBy};
use adaptive_binpack::model::Instance;
use adaptive_binpack::oracle::{solve_exact, Budget};
use adaptive_binpack::policy::{run_policy, PolicyKind, RunOptions};
use adaptive_binpack::rng::{rng_from_seed, splitmix64};
use adaptive_binpack::theory::{lindley_queue, prop2_exact_mean, sign_permutation};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a click responsive.
const MAX_ITEMS: usize = 400;
const MAX_CURVE_T: usize = 1000;
const MAX_TRIALS: usize = 50;
const MAX_WALK: usize = 5000;

fn list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad {what} `{s}`")))
        .collect()
}

#[derive(Serialize)]
struct PackedBin {
    load: u64,
    sizes: Vec<u64>,
}

#[derive(Serialize)]
struct Packing {
    policy: String,
    capacity: u64,
    online: Vec<PackedBin>,
    offline: Vec<PackedBin>,
    optimal: bool,
}

pub fn pack_json(capacity: u64, sizes: &str, policy: &str, seed: u64) -> Result<String, String> {
    let values: Vec<u64> = list(sizes, "size")?;
    if values.len() > MAX_ITEMS {
        return Err(format!("at most {MAX_ITEMS} items"));
    }
    let inst = Instance::new(capacity, values).map_err(|e| e.to_string())?;
    let policy: PolicyKind = policy.parse()?;
    let opts = RunOptions {
        seed: splitmix64(seed),
        ..RunOptions::default()
    };
    let run = run_policy(policy, &inst, inst.len(), &opts).map_err(|e| e.to_string())?;
    let size_of = |i: usize| inst.sizes()[i].value();
    let online = run
        .state
        .bins()
        .iter()
        .map(|b| PackedBin {
            load: b.load,
            sizes: b.items.iter().map(|&i| size_of(i)).collect(),
        })
        .collect();
    let exact = solve_exact(&inst, &Budget::default()).map_err(|e| e.to_string())?;
    let offline = exact
        .plan
        .bins
        .iter()
        .map(|items| {
            let sizes: Vec<u64> = items.iter().map(|&i| size_of(i)).collect();
            PackedBin {
                load: sizes.iter().sum(),
                sizes,
            }
        })
        .collect();
    let out = Packing {
        policy: policy.name().to_string(),
        capacity,
        online,
        offline,
        optimal: exact.optimal,
    };
    Ok(serde_json::to_string(&out).unwrap())
}

#[derive(Serialize)]
struct CurvePoint {
    policy: String,
    t: usize,
    mean: f64,
    stderr: f64,
}

pub fn regret_curve_json(
    source: &str,
    policies: &str,
    horizons: &str,
    trials: usize,
    seed: u64,
) -> Result<String, String> {
    let source = named_source(source).ok_or_else(|| format!("unknown source `{source}`"))?;
    let policies: Vec<PolicyKind> = list(policies, "policy")?;
    let ts: Vec<usize> = list(horizons, "horizon")?;
    if ts.iter().any(|&t| t > MAX_CURVE_T) || trials > MAX_TRIALS {
        return Err(format!("T is capped at {MAX_CURVE_T} and trials at {MAX_TRIALS}"));
    }
    let grid = ExperimentGrid::new(policies, source, ts, trials, seed);
    let records = run_bench(&grid).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = group_stats(&records, GroupBy::Horizon)
        .into_iter()
        .map(|g| CurvePoint {
            t: g.x.parse().expect("horizon label"),
            policy: g.policy,
            mean: g.mean,
            stderr: g.stderr,
        })
        .collect();
    Ok(serde_json::to_string(&points).unwrap())
}

#[derive(Serialize)]
struct Walk {
    tokens: Vec<i64>,
    queue: Vec<i64>,
    final_value: i64,
    exact_mean: f64,
    bound: f64,
}

pub fn lindley_walk_json(n: usize, seed: u64) -> Result<String, String> {
    if n == 0 || n > MAX_WALK {
        return Err(format!("N must be in 1..={MAX_WALK}"));
    }
    let tokens = sign_permutation(n, &mut rng_from_seed(seed));
    let run = lindley_queue(&tokens);
    let out = Walk {
        final_value: run.final_value,
        queue: run.trajectory,
        tokens,
        exact_mean: prop2_exact_mean(n),
        bound: 2.0 * (2.0 * n as f64).sqrt(),
    };
    Ok(serde_json::to_string(&out).unwrap())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Online packing of the given sizes next to an optimal offline packing.
#[wasm_bindgen]
pub fn pack(capacity: u32, sizes: &str, policy: &str, seed: u32) -> Result<String, JsError> {
    js(pack_json(capacity.into(), sizes, policy, seed.into()))
}

/// Mean regret with standard error per policy and horizon.
#[wasm_bindgen]
pub fn regret_curve(
    source: &str,
    policies: &str,
    horizons: &str,
    trials: u32,
    seed: u32,
) -> Result<String, JsError> {
    js(regret_curve_json(source, policies, horizons, trials as usize, seed.into()))
}

/// Queue trajectory over a random balanced sign string of length `2n`.
#[wasm_bindgen]
pub fn lindley_walk(n: u32, seed: u32) -> Result<String, JsError> {
    js(lindley_walk_json(n as usize, seed.into()))
}
