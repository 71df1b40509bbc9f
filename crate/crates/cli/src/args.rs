//! Flags and the config file. Every flag has a config-file key of the same
//! name (top level for global flags, a table per subcommand); flags win.

use std::path::{Path, PathBuf};

use adaptive_binpack::harness::OptReference;
use adaptive_binpack::oracle::OracleMode;
use adaptive_binpack::policy::{LevelRule, OverflowOracle, PolicyKind};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "binpack", version, about = "Online bin packing experiments")]
pub struct Cli {
    /// TOML file mirroring the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub global: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Globals {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (CSV for `bench`, JSON otherwise). Stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Wall-clock limit per exact-oracle call. Makes results timing dependent.
    #[arg(long = "budget-ms", global = true)]
    pub budget_ms: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one instance offline.
    Oracle(OracleArgs),
    /// Run one policy on one arrival sequence and print its trace.
    Run(RunArgs),
    /// Run a seeded experiment grid and write one CSV row per trial.
    Bench(BenchArgs),
    /// Monte-Carlo checks of the queueing and benchmark bounds.
    Verify(VerifyArgs),
    /// Quantile benchmark OPT_f / T along a horizon grid.
    Ce(CeArgs),
}

#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct OracleArgs {
    /// Instance file: `capacity <C>` then one size per line.
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<OracleMode>,
    /// Also print the plan, one `item -> bin` line per item.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plan: Option<bool>,
}

/// Where arrivals come from: a named source or distribution file, a ground-set
/// file, or a uniform size sweep at capacity `B`.
#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SourceArgs {
    /// A built-in name (bounded-waste, perfectly-packable, linear-waste,
    /// uniform, two-point, pairs, triples) or a TOML distribution file.
    #[arg(long)]
    pub dist: Option<String>,
    /// Instance file used as a ground set in random order.
    #[arg(long = "ground-set")]
    pub ground_set: Option<PathBuf>,
    /// Capacity: uniform sizes 1..B-1 when no source is given, else a check.
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<u64>,
    /// With `B`: uniform over J evenly spaced sizes.
    #[arg(long = "J")]
    #[serde(rename = "J")]
    pub j: Option<u64>,
}

#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(default, rename_all = "kebab-case")]
pub struct RunArgs {
    #[arg(long)]
    pub policy: Option<PolicyKind>,
    #[arg(long)]
    pub oracle: Option<OverflowOracle>,
    /// Horizon; defaults to the ground-set size.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    #[arg(long = "stop-at")]
    pub stop_at: Option<usize>,
    #[arg(long = "level-rule")]
    pub level_rule: Option<LevelRule>,
    #[arg(long = "opt-reference")]
    pub opt_reference: Option<OptReference>,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GroupArg {
    T,
    Dist,
}

#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(default, rename_all = "kebab-case")]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<PolicyKind>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    #[arg(long = "T", value_delimiter = ',')]
    #[serde(rename = "T")]
    pub t: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub oracle: Option<OverflowOracle>,
    #[arg(long = "opt-reference")]
    pub opt_reference: Option<OptReference>,
    #[arg(long = "level-rule")]
    pub level_rule: Option<LevelRule>,
    #[arg(long = "stop-at")]
    pub stop_at: Option<usize>,
    /// One grid per capacity, uniform sizes 1..B-1.
    #[arg(long = "sweep-B", value_delimiter = ',')]
    #[serde(rename = "sweep-B")]
    pub sweep_b: Option<Vec<u64>>,
    /// One grid per type count at capacity `B`.
    #[arg(long = "sweep-J", value_delimiter = ',')]
    #[serde(rename = "sweep-J")]
    pub sweep_j: Option<Vec<u64>>,
    /// Record wall-clock runtimes (the CSV is then not reproducible).
    #[arg(long = "record-runtime", num_args = 0..=1, default_missing_value = "true")]
    pub record_runtime: Option<bool>,
    /// Also write mean regret and standard error per group to this file.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long = "group-by")]
    pub group_by: Option<GroupArg>,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Prop2,
    Prop3,
    Prop6,
    Prop1,
    Ce,
}

#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(default, rename_all = "kebab-case")]
pub struct VerifyArgs {
    #[arg(long)]
    pub check: Option<Check>,
    /// Trials per point (instances for prop1).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Half-length of the sign strings (prop2).
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N")]
    pub n: Option<Vec<usize>>,
    /// Horizons (prop3, prop6 with a family, ce).
    #[arg(long = "T", value_delimiter = ',')]
    #[serde(rename = "T")]
    pub t: Option<Vec<usize>>,
    /// Block exponent (prop6); every k is checked when absent.
    #[arg(long)]
    pub k: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
}

#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(default, rename_all = "kebab-case")]
pub struct CeArgs {
    #[arg(long = "T", value_delimiter = ',')]
    #[serde(rename = "T")]
    pub t: Option<Vec<usize>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
}

#[derive(Deserialize, Default, Debug)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub budget_ms: Option<u64>,
    pub oracle: OracleArgs,
    pub run: RunArgs,
    pub bench: BenchArgs,
    pub verify: VerifyArgs,
    pub ce: CeArgs,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Field-wise `self.or(fallback)`.
pub trait Merge {
    fn merge(self, fallback: Self) -> Self;
}

macro_rules! merge_fields {
    ($t:ty { $($f:ident),* } $(nested { $($n:ident),* })?) => {
        impl Merge for $t {
            fn merge(self, fallback: Self) -> Self {
                Self {
                    $($f: self.$f.or(fallback.$f),)*
                    $($($n: self.$n.merge(fallback.$n),)*)?
                }
            }
        }
    };
}

merge_fields!(Globals { seed, out, budget_ms });
merge_fields!(OracleArgs { instance, mode, plan });
merge_fields!(SourceArgs { dist, ground_set, b, j });
merge_fields!(RunArgs { policy, oracle, t, stop_at, level_rule, opt_reference } nested { source });
merge_fields!(BenchArgs {
    policies, t, trials, oracle, opt_reference, level_rule, stop_at, sweep_b, sweep_j,
    record_runtime, plot, group_by
} nested { source });
merge_fields!(VerifyArgs { check, trials, n, t, k } nested { source });
merge_fields!(CeArgs { t } nested { source });
