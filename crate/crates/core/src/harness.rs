//! Seeded experiment grids over policies, horizons and trials, with regret
//! against an offline reference, CSV output and per-group summaries.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, GroundSet, GroundSetFamily, Rational};
use crate::error::HarnessError;
use crate::model::Instance;
use crate::oracle::{solve_exact, solve_fractional, Budget, FractionalOptions};
use crate::policy::{
    run_policy, LevelRule, OverflowOptions, OverflowOracle, PolicyKind, RunOptions,
};
use crate::rng::{mix_seed, splitmix64};

/// Where the arrivals of one trial come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    /// I.i.d. draws (stochastic model).
    Distribution(DistributionSpec),
    /// A ground set of size `T` in random order (random-permutation model).
    Family(GroundSetFamily),
    /// A fixed ground set; the horizon is its size.
    Ground(GroundSet),
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::Distribution(d) => d.label(),
            Source::Family(f) => f.label(),
            Source::Ground(g) => format!("ground(C={}|n={})", g.instance().capacity(), g.len()),
        }
    }

    pub fn capacity(&self) -> u64 {
        match self {
            Source::Distribution(d) => d.capacity(),
            Source::Family(f) => f.capacity,
            Source::Ground(g) => g.instance().capacity(),
        }
    }

    pub fn arrivals(&self, t: usize, seed: u64) -> Result<Instance, HarnessError> {
        match self {
            Source::Distribution(d) => Ok(d.sample_iid(t, seed)),
            Source::Family(f) => Ok(f.ground_set(t).sample_permutation(seed)),
            Source::Ground(g) if g.len() == t => Ok(g.sample_permutation(seed)),
            Source::Ground(g) => Err(HarnessError::Grid(format!(
                "ground set has {} items, horizon is {t}",
                g.len()
            ))),
        }
    }
}

/// Distributions and ground sets available by name.
pub fn named_source(name: &str) -> Option<Source> {
    let d = |s: DistributionSpec| Some(Source::Distribution(s));
    match name {
        "bounded-waste" => d(DistributionSpec::bounded_waste()),
        "perfectly-packable" => d(DistributionSpec::perfectly_packable()),
        "linear-waste" => d(DistributionSpec::linear_waste()),
        "uniform" => d(DistributionSpec::Uniform),
        "two-point" => d(DistributionSpec::two_point(Rational::new(1, 10)).unwrap()),
        "pairs" => Some(Source::Family(
            GroundSetFamily::new(10, vec![(6, Rational::new(1, 2)), (4, Rational::new(1, 2))])
                .unwrap(),
        )),
        "triples" => Some(Source::Family(
            GroundSetFamily::new(
                12,
                vec![
                    (7, Rational::new(1, 3)),
                    (3, Rational::new(1, 3)),
                    (2, Rational::new(1, 3)),
                ],
            )
            .unwrap(),
        )),
        _ => None,
    }
}

/// Uniform over `{1, ..., B-1}`.
pub fn capacity_sweep(b: u64) -> DistributionSpec {
    DistributionSpec::discrete_uniform(b, (1..b).collect()).expect("valid sweep")
}

/// Uniform over `J` evenly spaced sizes `ceil(i (B-1) / J)`.
pub fn type_sweep(b: u64, j: u64) -> DistributionSpec {
    let mut sizes: Vec<u64> = (1..=j).map(|i| (i * (b - 1)).div_ceil(j)).collect();
    sizes.dedup();
    DistributionSpec::discrete_uniform(b, sizes).expect("valid sweep")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptReference {
    Exact,
    Fractional,
    Volume,
}

impl std::str::FromStr for OptReference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(OptReference::Exact),
            "fractional" => Ok(OptReference::Fractional),
            "volume" => Ok(OptReference::Volume),
            _ => Err(format!("unknown reference `{s}` (exact|fractional|volume)")),
        }
    }
}

impl OptReference {
    /// Exact for small integer capacities, the LP bound for continuous
    /// instances up to 512 items, the volume bound beyond.
    pub fn default_for(source: &Source, t: usize) -> Self {
        if source.capacity() <= 12 {
            OptReference::Exact
        } else if t <= 512 {
            OptReference::Fractional
        } else {
            OptReference::Volume
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub policies: Vec<PolicyKind>,
    pub source: Source,
    pub t_values: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub oracle: OverflowOracle,
    /// `None` picks [`OptReference::default_for`] per horizon.
    pub opt_reference: Option<OptReference>,
    pub budget: Budget,
    pub fractional: FractionalOptions,
    pub level_rule: LevelRule,
    pub stop_at: Option<usize>,
    pub record_runtime: bool,
}

impl ExperimentGrid {
    pub fn new(
        policies: Vec<PolicyKind>,
        source: Source,
        t_values: Vec<usize>,
        trials: usize,
        base_seed: u64,
    ) -> Self {
        ExperimentGrid {
            policies,
            source,
            t_values,
            trials,
            base_seed,
            oracle: OverflowOracle::Exact,
            opt_reference: None,
            budget: Budget::default(),
            fractional: FractionalOptions::default(),
            level_rule: LevelRule::Sample,
            stop_at: None,
            record_runtime: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Grid(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.policies.is_empty() {
            return bad("no policies");
        }
        if self.t_values.is_empty() || self.t_values.contains(&0) {
            return bad("horizons must be positive");
        }
        if self.t_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("horizons must be strictly ascending");
        }
        Ok(())
    }

    /// Seed of the arrivals of trial `trial` at horizon `t`; shared by all policies.
    pub fn trial_seed(&self, t: usize, trial: usize) -> u64 {
        mix_seed(mix_seed(self.base_seed, t as u64), trial as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub policy: String,
    pub dist: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub trial: usize,
    pub seed: u64,
    /// Empty when the policy failed.
    pub bins: Option<usize>,
    /// Proven optimum of the realized instance, when computed.
    pub opt: Option<usize>,
    pub opt_f: Option<f64>,
    pub regret: Option<f64>,
    pub runtime_ms: u64,
}

/// The value regret is measured against, plus what was proven along the way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub value: Option<f64>,
    pub opt: Option<usize>,
    pub opt_f: Option<f64>,
}

/// Exact falls back to the solver's lower bound, fractional to the volume
/// bound, so the regret stays conservative when an oracle gives up.
pub fn reference(
    instance: &Instance,
    kind: OptReference,
    budget: &Budget,
    fractional: &FractionalOptions,
) -> Reference {
    match kind {
        OptReference::Exact => match solve_exact(instance, budget) {
            // the lower bound keeps the regret conservative when the search stops early
            Ok(o) if o.optimal => Reference {
                value: Some(o.bins() as f64),
                opt: Some(o.bins()),
                opt_f: None,
            },
            Ok(o) => Reference {
                value: Some(o.lower_bound as f64),
                opt: None,
                opt_f: None,
            },
            Err(_) => Reference {
                value: Some(crate::oracle::lower_bound_l2(instance) as f64),
                opt: None,
                opt_f: None,
            },
        },
        OptReference::Fractional => match solve_fractional(instance, fractional) {
            Ok(f) => Reference {
                value: Some(f.bin_lower_bound() as f64),
                opt: None,
                opt_f: Some(f.lower_bound),
            },
            Err(_) => Reference {
                value: Some(instance.volume_bound() as f64),
                opt: None,
                opt_f: None,
            },
        },
        OptReference::Volume => Reference {
            value: Some(instance.volume_bound() as f64),
            opt: None,
            opt_f: None,
        },
    }
}

fn run_cell(grid: &ExperimentGrid, t: usize, trial: usize, label: &str) -> Vec<TrialRecord> {
    let seed = grid.trial_seed(t, trial);
    let arrivals = match grid.source.arrivals(t, seed) {
        Ok(a) => a,
        Err(_) => return Vec::new(),
    };
    let stop = grid.stop_at.unwrap_or(t).min(t);
    let realized = arrivals.prefix(stop);
    let kind = grid
        .opt_reference
        .unwrap_or_else(|| OptReference::default_for(&grid.source, t));
    let r = reference(&realized, kind, &grid.budget, &grid.fractional);
    let opts = RunOptions {
        overflow: OverflowOptions {
            oracle: grid.oracle,
            budget: grid.budget.clone(),
            fractional: grid.fractional.clone(),
            ..OverflowOptions::default()
        },
        seed: splitmix64(seed),
        level_rule: grid.level_rule,
        stop_at: grid.stop_at,
    };
    grid.policies
        .iter()
        .map(|&p| {
            let start = grid.record_runtime.then(Instant::now);
            let bins = run_policy(p, &arrivals, t, &opts)
                .ok()
                .map(|res| res.bins_used());
            let runtime_ms = start.map_or(0, |s| s.elapsed().as_millis() as u64);
            TrialRecord {
                policy: p.name().to_string(),
                dist: label.to_string(),
                t,
                trial,
                seed,
                bins,
                opt: r.opt,
                opt_f: r.opt_f,
                regret: bins.zip(r.value).map(|(b, v)| b as f64 - v),
                runtime_ms,
            }
        })
        .collect()
}

/// One record per (T, trial, policy) in that order. Cells run in parallel.
pub fn run_bench(grid: &ExperimentGrid) -> Result<Vec<TrialRecord>, HarnessError> {
    grid.validate()?;
    let t_values: Vec<usize> = match &grid.source {
        Source::Ground(g) => vec![g.len()],
        _ => grid.t_values.clone(),
    };
    let label = grid.source.label();
    let cells: Vec<(usize, usize)> = t_values
        .iter()
        .flat_map(|&t| (0..grid.trials).map(move |i| (t, i)))
        .collect();
    let records = crate::par::par_map(cells.len(), |k| {
        run_cell(grid, cells[k].0, cells[k].1, &label)
    });
    Ok(records.into_iter().flatten().collect())
}

pub const CSV_HEADER: &str = "policy,dist,T,trial,seed,bins,opt,opt_f,regret,runtime_ms";

pub fn write_csv_to<W: std::io::Write>(records: &[TrialRecord], w: W) -> Result<(), HarnessError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(CSV_HEADER.split(','))?;
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv(records: &[TrialRecord], path: &Path) -> Result<(), HarnessError> {
    write_csv_to(records, std::fs::File::create(path)?)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Horizon,
    Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStat {
    pub policy: String,
    pub x: String,
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean regret and its standard error (sample sd / sqrt n) per (policy, x), in
/// order of first appearance. Failed records are skipped.
pub fn group_stats(records: &[TrialRecord], group_by: GroupBy) -> Vec<GroupStat> {
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for r in records {
        let Some(v) = r.regret else { continue };
        let x = match group_by {
            GroupBy::Horizon => r.t.to_string(),
            GroupBy::Distribution => r.dist.clone(),
        };
        let key = (r.policy.clone(), x);
        match keys.iter().position(|k| *k == key) {
            Some(i) => values[i].push(v),
            None => {
                keys.push(key);
                values.push(vec![v]);
            }
        }
    }
    keys.into_iter()
        .zip(values)
        .map(|((policy, x), v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let stderr = if n < 2 {
                0.0
            } else {
                (v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64)
                    .sqrt()
            };
            GroupStat {
                policy,
                x,
                n,
                mean,
                stderr,
            }
        })
        .collect()
}

/// Tab-separated `policy x n mean stderr`, one line per group.
pub fn emit_plot_data(records: &[TrialRecord], group_by: GroupBy) -> String {
    let mut out = String::from("policy\tx\tn\tmean\tstderr\n");
    for g in group_stats(records, group_by) {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}",
            g.policy, g.x, g.n, g.mean, g.stderr
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(regret: f64) -> TrialRecord {
        TrialRecord {
            policy: "best-fit".into(),
            dist: "d".into(),
            t: 10,
            trial: 0,
            seed: 1,
            bins: Some(3),
            opt: Some(3),
            opt_f: None,
            regret: Some(regret),
            runtime_ms: 0,
        }
    }

    #[test]
    fn single_cell_grid() {
        let g = ExperimentGrid::new(
            vec![PolicyKind::BestFit],
            named_source("bounded-waste").unwrap(),
            vec![20],
            1,
            5,
        );
        let r = run_bench(&g).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].regret.unwrap() >= 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&[], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            format!("{CSV_HEADER}\n")
        );
        let recs = vec![
            record(0.5),
            TrialRecord {
                bins: None,
                opt: None,
                opt_f: Some(2.25),
                regret: None,
                ..record(0.0)
            },
        ];
        write_csv(&recs[..1], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        write_csv(&recs, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), recs);
    }

    #[test]
    fn stats() {
        let s = group_stats(&[record(4.0)], GroupBy::Horizon);
        assert_eq!((s[0].mean, s[0].stderr), (4.0, 0.0));
        let s = group_stats(&[record(4.0), record(6.0)], GroupBy::Horizon);
        assert_eq!((s[0].n, s[0].mean, s[0].stderr), (2, 5.0, 1.0));
        assert!(emit_plot_data(&[record(4.0)], GroupBy::Horizon)
            .contains("best-fit\t10\t1\t4.000000\t0.000000"));
    }

    #[test]
    fn sweeps() {
        assert_eq!(
            type_sweep(10, 3)
                .atoms()
                .unwrap()
                .iter()
                .map(|a| a.0)
                .collect::<Vec<_>>(),
            vec![3, 6, 9]
        );
        assert_eq!(capacity_sweep(6).atoms().unwrap().len(), 5);
    }
}
