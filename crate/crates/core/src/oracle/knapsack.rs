//! Unbounded integer knapsack used as the pricing problem of the configuration LP.

use crate::model::Size;

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackResult {
    /// Best multiplicities found (indexed like the input), if any beat the floor.
    pub counts: Option<Vec<u32>>,
    pub value: f64,
    /// Valid upper bound on the optimum; equals `value` (or the floor) when the
    /// search completed.
    pub upper_bound: f64,
    pub complete: bool,
    pub nodes: u64,
}

struct Item {
    index: usize,
    weight: u64,
    profit: f64,
    ratio: f64,
}

struct Search<'a> {
    items: &'a [Item],
    counts: Vec<u32>,
    best: f64,
    best_counts: Option<Vec<u32>>,
    nodes: u64,
    max_nodes: u64,
    aborted_bound: f64,
    aborted: bool,
    suffix_min: Vec<u64>,
}

/// Maximises `sum profits[i] * t_i` subject to `sum sizes[i] * t_i <= capacity`
/// over nonnegative integers, looking only for solutions worth more than `floor`.
///
/// Depth-first branch and bound over items in decreasing profit/weight order with
/// the continuous bound. Stops after `max_nodes` nodes; the returned upper bound
/// stays valid in that case.
pub fn max_value_configuration(
    sizes: &[Size],
    profits: &[f64],
    capacity: u64,
    floor: f64,
    max_nodes: u64,
) -> KnapsackResult {
    let mut items: Vec<Item> = sizes
        .iter()
        .zip(profits)
        .enumerate()
        .filter(|(_, (s, &p))| p > 1e-12 && s.value() <= capacity)
        .map(|(index, (s, &p))| Item {
            index,
            weight: s.value(),
            profit: p,
            ratio: p / s.value() as f64,
        })
        .collect();
    items.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.index.cmp(&b.index)));
    let mut search = Search {
        items: &items,
        counts: vec![0; items.len()],
        best: floor,
        best_counts: None,
        nodes: 0,
        max_nodes,
        aborted_bound: f64::NEG_INFINITY,
        aborted: false,
        suffix_min: suffix_minima(&items),
    };
    if !items.is_empty() {
        search.dfs(0, capacity, 0.0);
    }
    let complete = !search.aborted;
    let upper_bound = if complete {
        search.best
    } else {
        search.best.max(search.aborted_bound)
    };
    let counts = search.best_counts.map(|sorted| {
        let mut out = vec![0u32; sizes.len()];
        for (item, c) in items.iter().zip(sorted) {
            out[item.index] = c;
        }
        out
    });
    KnapsackResult {
        counts,
        value: search.best,
        upper_bound,
        complete,
        nodes: search.nodes,
    }
}

impl Search<'_> {
    fn dfs(&mut self, k: usize, rem: u64, value: f64) {
        self.nodes += 1;
        let item = &self.items[k];
        let node_bound = value + rem as f64 * item.ratio;
        if self.nodes > self.max_nodes {
            self.aborted = true;
            self.aborted_bound = self.aborted_bound.max(node_bound);
            return;
        }
        let next_ratio = self.items.get(k + 1).map_or(0.0, |it| it.ratio);
        let max_t = rem / item.weight;
        for t in (0..=max_t).rev() {
            let v = value + t as f64 * item.profit;
            let r = rem - t * item.weight;
            // the bound is nonincreasing as t drops, so the first prune ends the loop
            let bound = v + r as f64 * next_ratio;
            if bound <= self.best * (1.0 + 1e-12) {
                break;
            }
            self.counts[k] = t as u32;
            if k + 1 == self.items.len() || r < self.min_weight_from(k + 1) {
                if v > self.best {
                    self.best = v;
                    let mut c = self.counts.clone();
                    c[k + 1..].iter_mut().for_each(|x| *x = 0);
                    self.best_counts = Some(c);
                }
            } else {
                self.dfs(k + 1, r, v);
                if self.aborted {
                    self.aborted_bound = self.aborted_bound.max(node_bound);
                    self.counts[k] = 0;
                    return;
                }
            }
        }
        self.counts[k] = 0;
    }

    fn min_weight_from(&self, k: usize) -> u64 {
        self.suffix_min[k]
    }
}

fn suffix_minima(items: &[Item]) -> Vec<u64> {
    let mut out = vec![u64::MAX; items.len() + 1];
    for k in (0..items.len()).rev() {
        out[k] = out[k + 1].min(items[k].weight);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(sizes: &[u64], profits: &[f64], cap: u64) -> f64 {
        fn go(i: usize, sizes: &[u64], profits: &[f64], rem: u64) -> f64 {
            if i == sizes.len() {
                return 0.0;
            }
            let mut best = 0.0f64;
            for t in 0..=rem / sizes[i] {
                let v = t as f64 * profits[i] + go(i + 1, sizes, profits, rem - t * sizes[i]);
                best = best.max(v);
            }
            best
        }
        go(0, sizes, profits, cap)
    }

    #[test]
    fn matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.gen_range(1..6);
            let cap = rng.gen_range(5..40);
            let mut sizes: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=cap)).collect();
            sizes.sort_unstable();
            sizes.dedup();
            let profits: Vec<f64> = sizes.iter().map(|_| rng.gen_range(-0.2..1.0)).collect();
            let s: Vec<Size> = sizes.iter().map(|&v| Size::raw(v)).collect();
            let r = max_value_configuration(&s, &profits, cap, 0.0, u64::MAX);
            let b = brute(&sizes, &profits, cap);
            assert!(r.complete);
            assert!(
                (r.value - b).abs() < 1e-9,
                "{sizes:?} {profits:?} {} vs {b}",
                r.value
            );
            if let Some(c) = r.counts {
                let w: u64 = c.iter().zip(&sizes).map(|(&c, &s)| c as u64 * s).sum();
                assert!(w <= cap);
            }
        }
    }

    #[test]
    fn floor_filters_and_budget_bounds() {
        let s = [Size::raw(5)];
        let r = max_value_configuration(&s, &[0.5], 10, 1.0, 100);
        assert!(r.counts.is_none());
        assert!(r.complete);
        let sizes: Vec<Size> = (1..40).map(|v| Size::raw(100 + v * 7)).collect();
        let profits: Vec<f64> = (1..40).map(|v| (100 + v * 7) as f64 / 1000.0).collect();
        let r = max_value_configuration(&sizes, &profits, 1000, 0.0, 50);
        assert!(!r.complete);
        assert!(r.upper_bound >= r.value);
        assert!(r.upper_bound <= 1.0 + 1e-9);
    }
}
