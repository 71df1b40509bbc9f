use std::collections::HashSet;

use crate::error::OracleError;
use crate::lp::{
    default_round_limit, solve_lp, solve_lp_with_columns_from, LinearProgram, PricedColumn,
    Relation,
};
use crate::model::{Instance, Size};

use super::configs::{enumerate_configurations, Configuration};
use super::knapsack::max_value_configuration;
use super::size_classes;

#[derive(Debug, Clone)]
pub struct FractionalOptions {
    /// Above this many maximal configurations the LP switches to column generation.
    pub enumerate_limit: usize,
    /// Node budget of one pricing knapsack.
    pub knapsack_nodes: u64,
    pub round_limit: Option<usize>,
}

impl Default for FractionalOptions {
    fn default() -> Self {
        FractionalOptions {
            enumerate_limit: 20_000,
            knapsack_nodes: 2_000_000,
            round_limit: None,
        }
    }
}

/// Solution of the configuration LP `min sum z_j  s.t.  sum_j a_ij z_j >= b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPlan {
    /// Distinct sizes ascending and their multiplicities `b_i`.
    pub sizes: Vec<Size>,
    pub demands: Vec<u64>,
    /// Configurations with positive weight.
    pub configs: Vec<Configuration>,
    pub weights: Vec<f64>,
    /// LP objective of the returned weights.
    pub value: f64,
    /// Certified lower bound on OPT_f: equal to `value` up to the pricing
    /// tolerance when `converged`, a Farley bound otherwise.
    pub lower_bound: f64,
    pub converged: bool,
    pub column_generation: bool,
}

impl FractionalPlan {
    fn empty() -> Self {
        FractionalPlan {
            sizes: Vec::new(),
            demands: Vec::new(),
            configs: Vec::new(),
            weights: Vec::new(),
            value: 0.0,
            lower_bound: 0.0,
            converged: true,
            column_generation: false,
        }
    }

    /// Largest shortfall `b_i - sum_j a_ij z_j` (nonpositive when covered).
    pub fn coverage_gap(&self) -> f64 {
        (0..self.sizes.len())
            .map(|i| {
                let covered: f64 = self
                    .configs
                    .iter()
                    .zip(&self.weights)
                    .map(|(c, w)| c.counts[i] as f64 * w)
                    .sum();
                self.demands[i] as f64 - covered
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ceil(lower_bound)` with a small tolerance: the integer bound on OPT.
    pub fn bin_lower_bound(&self) -> usize {
        (self.lower_bound - 1e-6).ceil().max(0.0) as usize
    }
}

pub fn solve_fractional(
    instance: &Instance,
    opts: &FractionalOptions,
) -> Result<FractionalPlan, OracleError> {
    if instance.is_empty() {
        return Ok(FractionalPlan::empty());
    }
    let (sizes, classes) = size_classes(instance);
    let demands: Vec<u64> = classes.iter().map(|c| c.len() as u64).collect();
    let cap = instance.capacity();
    match enumerate_configurations(&sizes, cap, opts.enumerate_limit) {
        Ok(configs) => solve_enumerated(sizes, demands, configs),
        Err(OracleError::TooManyConfigurations(_)) => solve_by_columns(sizes, demands, cap, opts),
        Err(e) => Err(e),
    }
}

pub(super) fn covering_lp(demands: &[u64], configs: &[Configuration]) -> LinearProgram {
    let mut lp = LinearProgram::new(vec![1.0; configs.len()]);
    for (i, &b) in demands.iter().enumerate() {
        let row = configs.iter().map(|c| c.counts[i] as f64).collect();
        lp.add(row, Relation::Ge, b as f64);
    }
    lp
}

fn solve_enumerated(
    sizes: Vec<Size>,
    demands: Vec<u64>,
    configs: Vec<Configuration>,
) -> Result<FractionalPlan, OracleError> {
    let lp = covering_lp(&demands, &configs);
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Err(OracleError::Uncovered);
    }
    let (configs, weights) = keep_positive(configs, &sol.primal);
    Ok(FractionalPlan {
        sizes,
        demands,
        configs,
        weights,
        value: sol.objective,
        lower_bound: sol.objective,
        converged: true,
        column_generation: false,
    })
}

fn keep_positive(configs: Vec<Configuration>, weights: &[f64]) -> (Vec<Configuration>, Vec<f64>) {
    configs
        .into_iter()
        .zip(weights)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(c, &w)| (c, w))
        .unzip()
}

fn solve_by_columns(
    sizes: Vec<Size>,
    demands: Vec<u64>,
    cap: u64,
    opts: &FractionalOptions,
) -> Result<FractionalPlan, OracleError> {
    let m = sizes.len();
    // homogeneous columns (each size alone, as many copies as fit) form a
    // feasible diagonal basis; first-fit-decreasing bins add good starting columns
    let mut configs: Vec<Configuration> = (0..m)
        .map(|i| {
            let mut counts = vec![0u32; m];
            counts[i] = (cap / sizes[i].value()) as u32;
            Configuration { counts }
        })
        .collect();
    let homogeneous: HashSet<Configuration> = configs.iter().cloned().collect();
    configs.extend(
        ffd_columns(&sizes, &demands, cap)
            .into_iter()
            .filter(|c| !homogeneous.contains(c)),
    );
    let base = covering_lp(&demands, &configs);
    let warm: Vec<usize> = (0..m).collect();
    let mut last_upper = f64::INFINITY;
    let mut last_complete = true;
    let round_limit = opts.round_limit.unwrap_or_else(|| default_round_limit(m));
    let res = solve_lp_with_columns_from(
        &base,
        Some(&warm),
        |duals| {
            let k = max_value_configuration(&sizes, duals, cap, 1.0 + 1e-9, opts.knapsack_nodes);
            last_upper = k.upper_bound;
            last_complete = k.complete;
            match k.counts {
                Some(counts) if k.value > 1.0 + 1e-7 => {
                    vec![PricedColumn {
                        cost: 1.0,
                        coeffs: counts.iter().map(|&c| c as f64).collect(),
                    }]
                }
                // no column found, or the budget ran out without one
                _ => Vec::new(),
            }
        },
        round_limit,
    )?;
    let sol = res.solution;
    if !sol.is_optimal() {
        return Err(OracleError::Uncovered);
    }
    for col in &res.generated {
        configs.push(Configuration {
            counts: col.coeffs.iter().map(|&c| c as u32).collect(),
        });
    }
    let dual_value: f64 = sol
        .duals
        .iter()
        .zip(&demands)
        .map(|(y, &b)| y * b as f64)
        .sum();
    let converged = last_complete;
    let lower_bound = if converged {
        sol.objective.min(dual_value / last_upper.max(1.0))
    } else {
        dual_value / last_upper.max(1.0)
    };
    let (configs, weights) = keep_positive(configs, &sol.primal);
    Ok(FractionalPlan {
        sizes,
        demands,
        configs,
        weights,
        value: sol.objective,
        lower_bound: lower_bound.min(sol.objective),
        converged,
        column_generation: true,
    })
}

/// Bin contents of first-fit-decreasing on the multiset, as count vectors.
fn ffd_columns(sizes: &[Size], demands: &[u64], cap: u64) -> Vec<Configuration> {
    let m = sizes.len();
    let mut bins: Vec<(u64, Vec<u32>)> = Vec::new();
    for i in (0..m).rev() {
        let x = sizes[i].value();
        for _ in 0..demands[i] {
            match bins.iter_mut().find(|(load, _)| load + x <= cap) {
                Some((load, counts)) => {
                    *load += x;
                    counts[i] += 1;
                }
                None => {
                    let mut counts = vec![0u32; m];
                    counts[i] = 1;
                    bins.push((x, counts));
                }
            }
        }
    }
    let mut out: Vec<Configuration> = bins
        .into_iter()
        .map(|(_, counts)| Configuration { counts })
        .collect();
    out.sort_by(|a, b| a.counts.cmp(&b.counts));
    out.dedup();
    out
}
