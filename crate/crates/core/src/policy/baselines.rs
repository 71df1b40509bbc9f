//! Classical online baselines as pure step functions.

use crate::model::{PackingState, Placement, Size};

/// Fullest bin that still fits `x`, lowest index among ties.
pub fn best_fit_step(state: &PackingState, x: Size) -> Placement {
    match state.fullest_bin_fitting(x) {
        Some(b) => Placement::ExistingBin(b),
        None => Placement::NewBin,
    }
}

/// Lowest-index bin that fits `x`.
pub fn first_fit_step(state: &PackingState, x: Size) -> Placement {
    let Some(max_level) = state.capacity().checked_sub(x.value()) else {
        return Placement::NewBin;
    };
    state
        .levels
        .range(..=max_level)
        .filter_map(|(_, set)| set.first().copied())
        .min()
        .map_or(Placement::NewBin, Placement::ExistingBin)
}

/// Keeps a single active bin (the most recently opened one).
pub fn next_fit_step(state: &PackingState, x: Size) -> Placement {
    match state.bins().len().checked_sub(1) {
        Some(last) if state.residual(last).unwrap_or(0) >= x.value() => {
            Placement::ExistingBin(last)
        }
        _ => Placement::NewBin,
    }
}

/// Sum of `N(h)^2` over partially filled levels after moving one bin from level
/// `from` (0 for a new bin) to `from + x`.
fn ssq_after(state: &PackingState, from: u64, x: u64, base: i128) -> i128 {
    let n = |h: u64| state.level_count(h) as i128;
    let mut s = base;
    if from > 0 {
        let c = n(from);
        s += (c - 1) * (c - 1) - c * c;
    }
    let to = from + x;
    if to < state.capacity() {
        let c = n(to);
        s += (c + 1) * (c + 1) - c * c;
    }
    s
}

/// Minimises the sum of squared level counts after the placement. Ties go to the
/// fuller resulting bin, then the lower starting level.
pub fn sum_of_squares_step(state: &PackingState, x: Size) -> Placement {
    let x = x.value();
    let base: i128 = state
        .level_histogram()
        .map(|(_, c)| (c as i128) * (c as i128))
        .sum();
    let mut best = (ssq_after(state, 0, x, base), -(x as i128), 0u64);
    let top = state.capacity().saturating_sub(x);
    let levels: Vec<u64> = state
        .level_histogram()
        .map(|(h, _)| h)
        .take_while(|&h| h <= top)
        .collect();
    for h in levels {
        let key = (ssq_after(state, h, x, base), -((h + x) as i128), h);
        if key < best {
            best = key;
        }
    }
    match best.2 {
        0 => Placement::NewBin,
        h => Placement::ExistingBin(state.first_bin_at_level(h).expect("level is occupied")),
    }
}
