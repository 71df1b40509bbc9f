//! Level-LP adaptive policy for integer sizes: one LP over item levels per
//! arrival, then a randomized placement proportional to the LP's mass.

use rand::Rng as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::lp::{solve_lp, LinearProgram, LpSolution, Relation};
use crate::model::{Instance, PackingState, Placement, Size};
use crate::rng::rng_from_seed;

/// Largest capacity the level LP accepts; beyond it the variable count is unreasonable.
pub const MAX_LEVEL_CAPACITY: u64 = 1000;

const MASS_TOLERANCE: f64 = 1e-9;

/// Variable layout of a level LP: `v(j, h)` for `h in 0..=B - s_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelLpModel {
    pub capacity: u64,
    /// Type sizes, ascending.
    pub types: Vec<u64>,
    offsets: Vec<usize>,
}

impl LevelLpModel {
    pub fn new(capacity: u64, types: Vec<u64>) -> Self {
        let mut offsets = Vec::with_capacity(types.len() + 1);
        let mut n = 0;
        for &s in &types {
            offsets.push(n);
            n += (capacity - s + 1) as usize;
        }
        offsets.push(n);
        LevelLpModel {
            capacity,
            types,
            offsets,
        }
    }

    pub fn num_vars(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Column of `v(j, h)`, if `h` is a level type `j` can sit on.
    pub fn var(&self, j: usize, h: u64) -> Option<usize> {
        (h + self.types[j] <= self.capacity).then(|| self.offsets[j] + h as usize)
    }

    /// `min sum_j v(j,0)` with one no-floating row per level `1..B-1` (`state[h]`
    /// bins already sit at level `h`) and `sum_h v(j,h) = balance[j]`.
    fn base_lp(&self, state: &dyn Fn(u64) -> f64, balance: &[f64]) -> LinearProgram {
        let n = self.num_vars();
        let mut objective = vec![0.0; n];
        for j in 0..self.types.len() {
            objective[self.var(j, 0).unwrap()] = 1.0;
        }
        let mut lp = LinearProgram::new(objective);
        for h in 1..self.capacity {
            let mut row = vec![0.0; n];
            for (j, &s) in self.types.iter().enumerate() {
                if let Some(c) = self.var(j, h) {
                    row[c] += 1.0;
                }
                if h >= s {
                    if let Some(c) = self.var(j, h - s) {
                        row[c] -= 1.0;
                    }
                }
            }
            lp.add(row, Relation::Le, state(h));
        }
        for (j, &b) in balance.iter().enumerate() {
            let mut row = vec![0.0; n];
            for h in 0..=self.capacity - self.types[j] {
                row[self.var(j, h).unwrap()] = 1.0;
            }
            lp.add(row, Relation::Eq, b);
        }
        lp
    }
}

/// `H_t`: level 0 and every occupied level.
pub fn open_levels(state: &PackingState) -> Vec<u64> {
    std::iter::once(0)
        .chain(state.level_histogram().map(|(h, _)| h))
        .collect()
}

/// The static LP `OPT_I(F)` for type sizes `types` with probabilities `probs`.
pub fn static_level_lp(
    capacity: u64,
    types: &[u64],
    probs: &[f64],
) -> (LevelLpModel, LinearProgram) {
    let model = LevelLpModel::new(capacity, types.to_vec());
    let lp = model.base_lp(&|_| 0.0, probs);
    (model, lp)
}

/// The per-arrival LP at time `t` (1-based) for an item of type `x_type`, with
/// `pmf` the empirical frequencies of `model.types` including the current item.
pub fn build_level_lp(
    model: &LevelLpModel,
    state: &PackingState,
    x_type: usize,
    pmf: &[f64],
    horizon: usize,
    t: usize,
) -> LinearProgram {
    let remaining = (horizon - t + 1) as f64;
    let balance: Vec<f64> = pmf.iter().map(|p| remaining * p).collect();
    let mut lp = model.base_lp(&|h| state.level_count(h) as f64, &balance);
    let mut row = vec![0.0; model.num_vars()];
    for h in open_levels(state) {
        if let Some(c) = model.var(x_type, h) {
            row[c] = 1.0;
        }
    }
    lp.add(row, Relation::Ge, 1.0 / horizon as f64);
    lp
}

/// Samples a level from `H_t` proportionally to `v*(x_type, h)`, using `u` in
/// `[0, 1)`. Returns the level and whether the degenerate fallback (level 0) fired.
pub fn select_level(
    model: &LevelLpModel,
    solution: &LpSolution,
    x_type: usize,
    levels: &[u64],
    u: f64,
) -> (u64, bool) {
    let weights: Vec<(u64, f64)> = levels
        .iter()
        .filter_map(|&h| {
            model
                .var(x_type, h)
                .map(|c| (h, solution.primal[c].max(0.0)))
        })
        .collect();
    let mass: f64 = weights.iter().map(|w| w.1).sum();
    if mass < MASS_TOLERANCE {
        return (0, true);
    }
    let target = u * mass;
    let mut acc = 0.0;
    for &(h, w) in &weights {
        acc += w;
        if target < acc && w > 0.0 {
            return (h, false);
        }
    }
    // rounding left the target past the last positive weight
    (weights.iter().rev().find(|w| w.1 > 0.0).unwrap().0, false)
}

/// How the arriving item's level is drawn from the LP's mass over `H_t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelRule {
    /// Proportionally to the mass.
    #[default]
    Sample,
    /// The level with the most mass, ties to the fuller bin. Not randomized.
    Mode,
}

impl FromStr for LevelRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sample" => Ok(LevelRule::Sample),
            "mode" => Ok(LevelRule::Mode),
            _ => Err(format!("unknown level rule `{s}` (sample|mode)")),
        }
    }
}

/// The level of `levels` with the largest `v*(x_type, h)`, ties to the higher
/// level, with the same fallback as [`select_level`].
pub fn mode_level(model: &LevelLpModel, solution: &LpSolution, x_type: usize, levels: &[u64]) -> (u64, bool) {
    let best = levels
        .iter()
        .filter_map(|&h| model.var(x_type, h).map(|c| (h, solution.primal[c].max(0.0))))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    match best {
        Some((h, w)) if w >= MASS_TOLERANCE => (h, false),
        _ => (0, true),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpStep {
    pub objective: f64,
    pub level: u64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpAdaptiveTrace {
    pub steps: Vec<LpStep>,
    pub fallbacks: usize,
}

pub fn run_lp_adaptive_policy(
    arrivals: &Instance,
    horizon: usize,
    seed: u64,
    rule: LevelRule,
    stop_at: Option<usize>,
) -> Result<(PackingState, LpAdaptiveTrace), PolicyError> {
    if arrivals.len() != horizon {
        return Err(PolicyError::HorizonMismatch {
            expected: horizon,
            got: arrivals.len(),
        });
    }
    let cap = arrivals.capacity();
    if cap > MAX_LEVEL_CAPACITY {
        return Err(PolicyError::NotIntegerRegime(cap));
    }
    let stop = stop_at.unwrap_or(horizon).min(horizon);
    let mut rng = rng_from_seed(seed);
    let mut state = PackingState::new(cap);
    // types seen so far with their counts; unseen types would be pinned to zero anyway
    let mut types: Vec<Size> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut model = LevelLpModel::new(cap, Vec::new());
    let mut steps = Vec::with_capacity(stop);
    for (i, &x) in arrivals.sizes()[..stop].iter().enumerate() {
        let t = i + 1;
        let j = match types.binary_search(&x) {
            Ok(j) => j,
            Err(j) => {
                types.insert(j, x);
                counts.insert(j, 0);
                model = LevelLpModel::new(cap, types.iter().map(|s| s.value()).collect());
                j
            }
        };
        counts[j] += 1;
        let pmf: Vec<f64> = counts.iter().map(|&c| c as f64 / t as f64).collect();
        let lp = build_level_lp(&model, &state, j, &pmf, horizon, t);
        let sol = solve_lp(&lp)?;
        let u: f64 = rng.gen();
        let (level, fallback) = if sol.is_optimal() {
            let levels = open_levels(&state);
            match rule {
                LevelRule::Sample => select_level(&model, &sol, j, &levels, u),
                LevelRule::Mode => mode_level(&model, &sol, j, &levels),
            }
        } else {
            (0, true)
        };
        let placement = match level {
            0 => Placement::NewBin,
            h => Placement::ExistingBin(
                state
                    .first_bin_at_level(h)
                    .expect("sampled level is occupied"),
            ),
        };
        state.place(x, placement)?;
        steps.push(LpStep {
            objective: sol.objective,
            level,
            fallback,
        });
    }
    let fallbacks = steps.iter().filter(|s| s.fallback).count();
    Ok((state, LpAdaptiveTrace { steps, fallbacks }))
}
