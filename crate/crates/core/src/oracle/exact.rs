use std::time::Instant;

use crate::error::OracleError;
use crate::lp::{solve_lp, Relation};
use crate::model::{Instance, Size};

use super::configs::{enumerate_configurations, Configuration};
use super::fractional::covering_lp;
use super::{
    decreasing_order, first_fit_into, instantiate, lower_bound_l2, size_classes, solve_ffd,
    IntegralPlan,
};

/// Arbitrary-size instances above this many items are refused unless
/// [`Budget::allow_large`] is set.
pub const ARBITRARY_SIZE_LIMIT: usize = 30;

const CONFIG_PATH_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ExactPath {
    /// Branch and bound on configuration counts with the LP bound.
    Configurations,
    /// Branch and bound on item-to-bin assignments.
    Assignments,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: u64,
    /// Wall-clock limit. Results under a time limit are not reproducible.
    pub max_millis: Option<u64>,
    pub allow_large: bool,
    pub force_path: Option<ExactPath>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 200_000,
            max_millis: None,
            allow_large: false,
            force_path: None,
        }
    }
}

impl Budget {
    pub fn nodes(max_nodes: u64) -> Self {
        Budget {
            max_nodes,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome {
    pub plan: IntegralPlan,
    /// False when the budget ran out; `plan` is then the best incumbent.
    pub optimal: bool,
    pub lower_bound: usize,
    pub nodes: u64,
    pub path: ExactPath,
}

impl ExactOutcome {
    pub fn bins(&self) -> usize {
        self.plan.num_bins()
    }
}

struct Clock {
    /// Read only under a time limit; targets without a clock never touch it.
    start: Option<Instant>,
    max_nodes: u64,
    max_millis: Option<u64>,
    nodes: u64,
}

impl Clock {
    fn new(b: &Budget) -> Self {
        Clock {
            start: b.max_millis.map(|_| Instant::now()),
            max_nodes: b.max_nodes,
            max_millis: b.max_millis,
            nodes: 0,
        }
    }

    /// Counts a node; true when the budget is exhausted.
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return true;
        }
        match (self.max_millis, self.start) {
            (Some(ms), Some(start)) if self.nodes.is_multiple_of(256) => {
                start.elapsed().as_millis() as u64 >= ms
            }
            _ => false,
        }
    }
}

/// Optimal packing, or the best incumbent when the budget runs out.
pub fn solve_exact(instance: &Instance, budget: &Budget) -> Result<ExactOutcome, OracleError> {
    if instance.is_empty() {
        return Ok(ExactOutcome {
            plan: IntegralPlan::from_bins(instance.capacity(), 0, Vec::new()),
            optimal: true,
            lower_bound: 0,
            nodes: 0,
            path: ExactPath::Configurations,
        });
    }
    let (sizes, classes) = size_classes(instance);
    let path = match budget.force_path {
        Some(p) => p,
        None => match enumerate_configurations(&sizes, instance.capacity(), CONFIG_PATH_LIMIT) {
            Ok(_) => ExactPath::Configurations,
            Err(_) => ExactPath::Assignments,
        },
    };
    match path {
        ExactPath::Configurations => {
            let configs =
                enumerate_configurations(&sizes, instance.capacity(), super::CONFIG_HARD_LIMIT)?;
            Ok(by_configurations(
                instance, &sizes, &classes, configs, budget,
            )?)
        }
        ExactPath::Assignments => {
            if instance.len() > ARBITRARY_SIZE_LIMIT && !budget.allow_large {
                return Err(OracleError::TooLarge {
                    n: instance.len(),
                    limit: ARBITRARY_SIZE_LIMIT,
                });
            }
            Ok(by_assignments(instance, budget))
        }
    }
}

fn plan_from_counts(
    instance: &Instance,
    sizes: &[Size],
    classes: &[Vec<usize>],
    configs: &[Configuration],
    counts: &[u64],
) -> IntegralPlan {
    let (mut bins, mut loads, residual) = instantiate(instance, sizes, classes, configs, counts);
    let order = decreasing_order(instance, residual);
    first_fit_into(instance, &order, &mut bins, &mut loads);
    IntegralPlan::from_bins(instance.capacity(), instance.len(), bins)
}

struct Node {
    lower: Vec<u64>,
    upper: Vec<Option<u64>>,
}

fn by_configurations(
    instance: &Instance,
    sizes: &[Size],
    classes: &[Vec<usize>],
    configs: Vec<Configuration>,
    budget: &Budget,
) -> Result<ExactOutcome, OracleError> {
    let demands: Vec<u64> = classes.iter().map(|c| c.len() as u64).collect();
    let lb = lower_bound_l2(instance);
    let mut best = solve_ffd(instance);
    let mut clock = Clock::new(budget);
    let n = configs.len();
    let mut stack = vec![Node {
        lower: vec![0; n],
        upper: vec![None; n],
    }];
    let mut global_lb: Option<usize> = None;
    let mut exhausted = false;

    while let Some(node) = stack.pop() {
        if best.num_bins() <= lb.max(global_lb.unwrap_or(0)) {
            break;
        }
        if clock.tick() {
            exhausted = true;
            break;
        }
        let mut lp = covering_lp(&demands, &configs);
        for j in 0..n {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            if node.lower[j] > 0 {
                lp.add(row.clone(), Relation::Ge, node.lower[j] as f64);
            }
            if let Some(u) = node.upper[j] {
                lp.add(row, Relation::Le, u as f64);
            }
        }
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            continue;
        }
        let node_lb = (sol.objective - 1e-6).ceil().max(0.0) as usize;
        if global_lb.is_none() {
            global_lb = Some(node_lb);
        }
        if node_lb >= best.num_bins() {
            continue;
        }
        // rounding heuristic: floor the weights, first-fit the rest
        let floors: Vec<u64> = sol
            .primal
            .iter()
            .map(|&z| (z + 1e-6).floor() as u64)
            .collect();
        let heuristic = plan_from_counts(instance, sizes, classes, &configs, &floors);
        if heuristic.num_bins() < best.num_bins() {
            best = heuristic;
        }
        if node_lb >= best.num_bins() {
            continue;
        }
        let branch = sol
            .primal
            .iter()
            .enumerate()
            .map(|(j, &z)| (j, (z - z.floor()).min(z.ceil() - z)))
            .filter(|&(_, f)| f > 1e-6)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((j, _)) = branch else {
            // integral LP optimum: its plan is at most node_lb bins, already recorded above
            continue;
        };
        let z = sol.primal[j];
        let mut down = Node {
            lower: node.lower.clone(),
            upper: node.upper.clone(),
        };
        down.upper[j] = Some(z.floor() as u64);
        let mut up = node;
        up.lower[j] = z.ceil() as u64;
        // depth first, rounding up first
        stack.push(down);
        stack.push(up);
    }
    let root_lb = lb.max(global_lb.unwrap_or(0));
    let optimal = !exhausted;
    Ok(ExactOutcome {
        lower_bound: if optimal { best.num_bins() } else { root_lb },
        plan: best,
        optimal,
        nodes: clock.nodes,
        path: ExactPath::Configurations,
    })
}

struct AssignSearch<'a> {
    cap: u64,
    sizes: Vec<u64>,
    suffix: Vec<u128>,
    loads: Vec<u64>,
    assign: Vec<usize>,
    best_bins: usize,
    best_assign: Option<Vec<usize>>,
    target: usize,
    clock: &'a mut Clock,
    aborted: bool,
}

fn by_assignments(instance: &Instance, budget: &Budget) -> ExactOutcome {
    let order = decreasing_order(instance, 0..instance.len());
    let sizes: Vec<u64> = order.iter().map(|&i| instance.sizes()[i].value()).collect();
    let mut suffix = vec![0u128; sizes.len() + 1];
    for k in (0..sizes.len()).rev() {
        suffix[k] = suffix[k + 1] + sizes[k] as u128;
    }
    let ffd = solve_ffd(instance);
    let target = lower_bound_l2(instance);
    let mut clock = Clock::new(budget);
    let mut search = AssignSearch {
        cap: instance.capacity(),
        sizes,
        suffix,
        loads: Vec::new(),
        assign: vec![0; order.len()],
        best_bins: ffd.num_bins(),
        best_assign: None,
        target,
        clock: &mut clock,
        aborted: false,
    };
    if search.best_bins > target {
        search.dfs(0);
    }
    let optimal = !search.aborted;
    let best_bins = search.best_bins;
    let plan = match search.best_assign.take() {
        Some(assign) => {
            let mut bins = vec![Vec::new(); best_bins];
            for (k, &b) in assign.iter().enumerate() {
                bins[b].push(order[k]);
            }
            IntegralPlan::from_bins(instance.capacity(), instance.len(), bins)
        }
        None => ffd,
    };
    ExactOutcome {
        lower_bound: if optimal { plan.num_bins() } else { target },
        plan,
        optimal,
        nodes: clock.nodes,
        path: ExactPath::Assignments,
    }
}

impl AssignSearch<'_> {
    fn dfs(&mut self, k: usize) {
        if self.best_bins <= self.target || self.aborted {
            return;
        }
        if self.clock.tick() {
            self.aborted = true;
            return;
        }
        if k == self.sizes.len() {
            if self.loads.len() < self.best_bins {
                self.best_bins = self.loads.len();
                self.best_assign = Some(self.assign.clone());
            }
            return;
        }
        let used: u128 = self.loads.iter().map(|&l| l as u128).sum();
        let volume = (used + self.suffix[k]).div_ceil(self.cap as u128) as usize;
        if self.loads.len().max(volume) >= self.best_bins {
            return;
        }
        let s = self.sizes[k];
        let mut tried: Vec<u64> = Vec::new();
        for b in 0..self.loads.len() {
            let load = self.loads[b];
            if load + s > self.cap || tried.contains(&load) {
                continue;
            }
            tried.push(load);
            self.loads[b] += s;
            self.assign[k] = b;
            self.dfs(k + 1);
            self.loads[b] -= s;
            if self.aborted || self.best_bins <= self.target {
                return;
            }
        }
        if self.loads.len() + 1 < self.best_bins {
            self.loads.push(s);
            self.assign[k] = self.loads.len() - 1;
            self.dfs(k + 1);
            self.loads.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(cap: u64, v: &[u64]) -> Instance {
        Instance::new(cap, v.iter().copied()).unwrap()
    }

    fn both_paths(i: &Instance) -> (usize, usize) {
        let a = solve_exact(
            i,
            &Budget {
                force_path: Some(ExactPath::Configurations),
                ..Default::default()
            },
        )
        .unwrap();
        let b = solve_exact(
            i,
            &Budget {
                force_path: Some(ExactPath::Assignments),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(a.optimal && b.optimal);
        a.plan.validate(i).unwrap();
        b.plan.validate(i).unwrap();
        (a.bins(), b.bins())
    }

    #[test]
    fn fills_one_bin_exactly() {
        assert_eq!(both_paths(&inst(9, &[2, 2, 2, 3])), (1, 1));
    }

    #[test]
    fn pairwise_incompatible() {
        assert_eq!(both_paths(&inst(10, &[6, 6, 5])), (3, 3));
    }

    #[test]
    fn empty_is_zero() {
        let o = solve_exact(&Instance::empty(10), &Budget::default()).unwrap();
        assert_eq!(o.bins(), 0);
        assert!(o.optimal);
    }

    #[test]
    fn ffd_is_not_always_optimal() {
        // FFD uses 3 bins here; {44,36,20} and {41,37,22} hits 2
        let i = inst(100, &[44, 41, 37, 36, 22, 20]);
        assert_eq!(both_paths(&i), (2, 2));
    }

    #[test]
    fn large_arbitrary_instances_are_refused() {
        let vals: Vec<u64> = (0..31).map(|k| 1000 + k).collect();
        let i = inst(1_000_000, &vals);
        let err = solve_exact(
            &i,
            &Budget {
                force_path: Some(ExactPath::Assignments),
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(OracleError::TooLarge { n: 31, .. })));
    }

    #[test]
    fn budget_exhaustion_keeps_incumbent() {
        let vals = [44, 41, 37, 36, 22, 20];
        let i = inst(100, &vals);
        let o = solve_exact(
            &i,
            &Budget {
                max_nodes: 1,
                force_path: Some(ExactPath::Assignments),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!o.optimal);
        o.plan.validate(&i).unwrap();
        assert!(o.bins() >= 2);
    }
}
