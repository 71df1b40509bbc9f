//! Offline oracles: exact OPT, the configuration LP relaxation OPT_f, rounded
//! and first-fit-decreasing plans, and lower bounds.

mod configs;
mod exact;
mod fractional;
mod knapsack;

use std::fmt;

use crate::model::{Instance, Size};

pub use configs::{enumerate_configurations, Configuration, CONFIG_HARD_LIMIT};
pub use exact::{solve_exact, Budget, ExactOutcome, ExactPath, ARBITRARY_SIZE_LIMIT};
pub use fractional::{solve_fractional, FractionalOptions, FractionalPlan};
pub use knapsack::{max_value_configuration, KnapsackResult};

/// A packing of concrete items: `bins[b]` lists item ids, `bin_of[id]` is the inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralPlan {
    pub capacity: u64,
    pub bins: Vec<Vec<usize>>,
    pub bin_of: Vec<usize>,
}

impl IntegralPlan {
    pub fn from_bins(capacity: u64, n_items: usize, bins: Vec<Vec<usize>>) -> Self {
        let mut bin_of = vec![usize::MAX; n_items];
        for (b, items) in bins.iter().enumerate() {
            for &i in items {
                bin_of[i] = b;
            }
        }
        IntegralPlan {
            capacity,
            bins,
            bin_of,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    /// Checks that every item is assigned once, no bin is empty and no bin overflows.
    pub fn validate(&self, instance: &Instance) -> Result<(), String> {
        let n = instance.len();
        if self.bin_of.len() != n {
            return Err(format!(
                "plan covers {} items, instance has {n}",
                self.bin_of.len()
            ));
        }
        let mut seen = vec![false; n];
        for (b, items) in self.bins.iter().enumerate() {
            if items.is_empty() {
                return Err(format!("bin {b} is empty"));
            }
            let mut load = 0u64;
            for &i in items {
                if i >= n || seen[i] {
                    return Err(format!("item {i} is out of range or assigned twice"));
                }
                seen[i] = true;
                if self.bin_of[i] != b {
                    return Err(format!(
                        "bin_of[{i}] = {} but item sits in bin {b}",
                        self.bin_of[i]
                    ));
                }
                load += instance.sizes()[i].value();
            }
            if load > self.capacity {
                return Err(format!(
                    "bin {b} has load {load} over capacity {}",
                    self.capacity
                ));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(format!("item {i} is not assigned"));
        }
        Ok(())
    }
}

/// Which oracle to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    Exact,
    Fractional,
    Ffd,
    Round,
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMode::Exact => "exact",
            OracleMode::Fractional => "fractional",
            OracleMode::Ffd => "ffd",
            OracleMode::Round => "round",
        })
    }
}

impl std::str::FromStr for OracleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(OracleMode::Exact),
            "fractional" => Ok(OracleMode::Fractional),
            "ffd" => Ok(OracleMode::Ffd),
            "round" => Ok(OracleMode::Round),
            _ => Err(format!("unknown mode `{s}` (exact|fractional|ffd|round)")),
        }
    }
}

/// Item ids ordered by decreasing size, ties by id.
fn decreasing_order(instance: &Instance, ids: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let sizes = instance.sizes();
    let mut ids: Vec<usize> = ids.into_iter().collect();
    ids.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    ids
}

/// First-fit of `ids` (in the given order) into `bins` with current `loads`,
/// opening bins as needed.
fn first_fit_into(
    instance: &Instance,
    ids: &[usize],
    bins: &mut Vec<Vec<usize>>,
    loads: &mut Vec<u64>,
) {
    let cap = instance.capacity();
    for &i in ids {
        let s = instance.sizes()[i].value();
        match loads.iter().position(|&l| l + s <= cap) {
            Some(b) => {
                loads[b] += s;
                bins[b].push(i);
            }
            None => {
                loads.push(s);
                bins.push(vec![i]);
            }
        }
    }
}

/// First-fit decreasing.
pub fn solve_ffd(instance: &Instance) -> IntegralPlan {
    let order = decreasing_order(instance, 0..instance.len());
    let mut bins = Vec::new();
    let mut loads = Vec::new();
    first_fit_into(instance, &order, &mut bins, &mut loads);
    IntegralPlan::from_bins(instance.capacity(), instance.len(), bins)
}

/// Groups item ids by distinct size, ascending sizes, ids ascending within a class.
pub(crate) fn size_classes(instance: &Instance) -> (Vec<Size>, Vec<Vec<usize>>) {
    let mut order: Vec<usize> = (0..instance.len()).collect();
    let sizes = instance.sizes();
    order.sort_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(a.cmp(&b)));
    let mut distinct: Vec<Size> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in order {
        if distinct.last() != Some(&sizes[i]) {
            distinct.push(sizes[i]);
            classes.push(Vec::new());
        }
        classes.last_mut().unwrap().push(i);
    }
    (distinct, classes)
}

/// Opens `counts[j]` bins of configuration `j`, in configuration order, and fills
/// their slots from the largest size down with the lowest-id unassigned items of
/// each class. Slots without a remaining item stay empty; empty bins are dropped.
/// Returns the bins, their loads and the ids left unassigned.
fn instantiate(
    instance: &Instance,
    distinct: &[Size],
    classes: &[Vec<usize>],
    configs: &[Configuration],
    counts: &[u64],
) -> (Vec<Vec<usize>>, Vec<u64>, Vec<usize>) {
    let mut next = vec![0usize; classes.len()];
    let mut bins = Vec::new();
    let mut loads = Vec::new();
    for (config, &copies) in configs.iter().zip(counts) {
        for _ in 0..copies {
            let mut bin = Vec::new();
            let mut load = 0;
            for i in (0..distinct.len()).rev() {
                for _ in 0..config.counts[i] {
                    if next[i] < classes[i].len() {
                        bin.push(classes[i][next[i]]);
                        next[i] += 1;
                        load += distinct[i].value();
                    }
                }
            }
            if !bin.is_empty() {
                bins.push(bin);
                loads.push(load);
            }
        }
    }
    let residual = classes
        .iter()
        .zip(&next)
        .flat_map(|(class, &k)| class[k..].iter().copied())
        .collect();
    let _ = instance;
    (bins, loads, residual)
}

/// Floors the configuration weights, instantiates those bins, and first-fits the
/// leftover items in decreasing order (into remaining space first, then new bins).
pub fn round_plan(fractional: &FractionalPlan, instance: &Instance) -> IntegralPlan {
    let (distinct, classes) = size_classes(instance);
    debug_assert_eq!(distinct, fractional.sizes);
    let counts: Vec<u64> = fractional
        .weights
        .iter()
        .map(|&w| (w + 1e-9).floor().max(0.0) as u64)
        .collect();
    let (mut bins, mut loads, residual) =
        instantiate(instance, &distinct, &classes, &fractional.configs, &counts);
    let order = decreasing_order(instance, residual);
    first_fit_into(instance, &order, &mut bins, &mut loads);
    IntegralPlan::from_bins(instance.capacity(), instance.len(), bins)
}

/// Martello-Toth L2 lower bound (never below the volume bound).
pub fn lower_bound_l2(instance: &Instance) -> usize {
    let volume = instance.volume_bound();
    if instance.is_empty() {
        return 0;
    }
    let cap = instance.capacity() as u128;
    let mut sizes: Vec<u128> = instance.values().map(u128::from).collect();
    sizes.sort_unstable();
    let mut thresholds: Vec<u128> = sizes.iter().copied().filter(|&s| 2 * s <= cap).collect();
    thresholds.push(0);
    thresholds.dedup();
    let mut best = volume;
    for k in thresholds {
        let mut n1 = 0u128;
        let mut n2 = 0u128;
        let mut sum2 = 0u128;
        let mut sum3 = 0u128;
        for &s in &sizes {
            if s > cap - k {
                n1 += 1;
            } else if 2 * s > cap {
                n2 += 1;
                sum2 += s;
            } else if s >= k {
                sum3 += s;
            }
        }
        let free = n2 * cap - sum2;
        let extra = sum3.saturating_sub(free).div_ceil(cap);
        best = best.max((n1 + n2 + extra) as usize);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(cap: u64, v: &[u64]) -> Instance {
        Instance::new(cap, v.iter().copied()).unwrap()
    }

    #[test]
    fn ffd_examples() {
        let i = inst(10, &[5, 5]);
        let p = solve_ffd(&i);
        assert_eq!(p.num_bins(), 1);
        p.validate(&i).unwrap();

        let i = inst(10, &[6, 5, 4, 5]);
        let p = solve_ffd(&i);
        assert_eq!(p.num_bins(), 2);
        // 0.6 pairs with 0.4, the two halves share a bin
        assert_eq!(p.bin_of[0], p.bin_of[2]);
        assert_eq!(p.bin_of[1], p.bin_of[3]);

        assert_eq!(solve_ffd(&inst(10, &[7, 7, 7])).num_bins(), 3);
        assert_eq!(solve_ffd(&Instance::empty(10)).num_bins(), 0);
    }

    #[test]
    fn l2_examples() {
        assert_eq!(lower_bound_l2(&inst(10, &[6, 6, 6])), 3);
        assert_eq!(lower_bound_l2(&inst(10, &[5, 5])), 1);
        assert_eq!(lower_bound_l2(&Instance::empty(10)), 0);
        // three items above half plus small ones that cannot share with them
        assert_eq!(lower_bound_l2(&inst(10, &[7, 7, 7, 4, 4])), 4);
    }

    #[test]
    fn plan_validation_reports_problems() {
        let i = inst(10, &[6, 6]);
        let bad = IntegralPlan::from_bins(10, 2, vec![vec![0, 1]]);
        assert!(bad.validate(&i).unwrap_err().contains("over capacity"));
        let bad = IntegralPlan::from_bins(10, 2, vec![vec![0]]);
        assert!(bad.validate(&i).unwrap_err().contains("not assigned"));
    }
}
