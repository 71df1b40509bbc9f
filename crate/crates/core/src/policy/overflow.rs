//! Adaptive overflow policy: geometric phases, each packing its online stretch
//! into the slots of an offline plan for everything seen before the phase.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::model::{Instance, PackingState, Placement, Size};
use crate::oracle::{
    round_plan, solve_exact, solve_ffd, solve_fractional, Budget, FractionalOptions, IntegralPlan,
};
use crate::theory::lindley_queue;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseSchedule {
    pub horizon: usize,
    pub phases: u32,
    /// `T_0, ..., T_K`.
    pub boundaries: Vec<usize>,
}

/// `K = ceil(log2 T)` and `T_k = ceil(T / 2^(K-k))`.
pub fn phase_boundaries(horizon: usize) -> PhaseSchedule {
    assert!(horizon >= 1, "horizon must be positive");
    let k = usize::BITS - (horizon - 1).leading_zeros();
    let k = if horizon == 1 { 0 } else { k };
    let boundaries = (0..=k)
        .map(|i| {
            let d = 1u128 << (k - i);
            (horizon as u128).div_ceil(d) as usize
        })
        .collect();
    PhaseSchedule {
        horizon,
        phases: k,
        boundaries,
    }
}

/// Slots of an offline plan, sorted by size (ties by arrival index), with the
/// vacant ones kept in an ordered set for successor queries.
#[derive(Debug, Clone)]
pub struct SlotBook {
    sizes: Vec<Size>,
    slot_bin: Vec<usize>,
    vacant: BTreeSet<(Size, usize)>,
}

impl SlotBook {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn size(&self, slot: usize) -> Size {
        self.sizes[slot]
    }

    /// Plan bin holding slot `slot`.
    pub fn bin(&self, slot: usize) -> usize {
        self.slot_bin[slot]
    }

    pub fn is_vacant(&self, slot: usize) -> bool {
        self.vacant.contains(&(self.sizes[slot], slot))
    }

    pub fn vacant_count(&self) -> usize {
        self.vacant.len()
    }

    /// Least vacant slot whose size is at least `x`.
    pub fn vacancy_search(&self, x: Size) -> Option<usize> {
        self.vacant.range((x, 0)..).next().map(|&(_, s)| s)
    }

    pub fn occupy(&mut self, slot: usize) {
        let removed = self.vacant.remove(&(self.sizes[slot], slot));
        debug_assert!(removed, "slot {slot} was not vacant");
    }
}

pub fn build_slot_book(history: &Instance, plan: &IntegralPlan) -> Result<SlotBook, PolicyError> {
    plan.validate(history).map_err(PolicyError::PlanMismatch)?;
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by_key(|&i| (history.sizes()[i], i));
    let sizes: Vec<Size> = order.iter().map(|&i| history.sizes()[i]).collect();
    let slot_bin = order.iter().map(|&i| plan.bin_of[i]).collect();
    let vacant = sizes.iter().enumerate().map(|(s, &x)| (x, s)).collect();
    Ok(SlotBook {
        sizes,
        slot_bin,
        vacant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverflowOracle {
    /// Exact OPT, falling back to the rounded LP plan when the budget runs out.
    Exact,
    /// Configuration LP rounded down, leftovers first-fit.
    Approx,
}

impl std::str::FromStr for OverflowOracle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(OverflowOracle::Exact),
            "approx" => Ok(OverflowOracle::Approx),
            _ => Err(format!("unknown oracle `{s}` (exact|approx)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanSource {
    Exact,
    RoundedLp,
    Ffd,
}

#[derive(Debug, Clone)]
pub struct OverflowOptions {
    pub oracle: OverflowOracle,
    pub budget: Budget,
    pub fractional: FractionalOptions,
    /// Histories with more distinct sizes than this skip the LP and are planned
    /// by first-fit decreasing.
    pub lp_size_limit: usize,
    /// Process only the first `stop_at` arrivals (the policy still plans for `T`).
    pub stop_at: Option<usize>,
}

impl Default for OverflowOptions {
    fn default() -> Self {
        OverflowOptions {
            oracle: OverflowOracle::Exact,
            budget: Budget::default(),
            fractional: FractionalOptions::default(),
            lp_size_limit: 600,
            stop_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseTrace {
    pub phase: u32,
    /// `T_{k-1}`: items in the offline problem.
    pub history: usize,
    /// `T_k`.
    pub end: usize,
    pub plan_bins: usize,
    /// Plan bins that received an online item (the only ones opened).
    pub plan_bins_opened: usize,
    pub overflow: usize,
    /// Final queue length of the replayed token string.
    pub queue: usize,
    pub source: PlanSource,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverflowTrace {
    pub schedule: PhaseSchedule,
    pub phases: Vec<PhaseTrace>,
    /// Bin count if every plan bin were opened up front.
    pub bins_eager: usize,
}

fn plan_for(
    history: &Instance,
    opts: &OverflowOptions,
) -> Result<(IntegralPlan, PlanSource, bool), PolicyError> {
    let rounded = |fallback: bool| -> (IntegralPlan, PlanSource, bool) {
        if history.size_counts().len() > opts.lp_size_limit {
            return (solve_ffd(history), PlanSource::Ffd, fallback);
        }
        match solve_fractional(history, &opts.fractional) {
            Ok(f) => (round_plan(&f, history), PlanSource::RoundedLp, fallback),
            Err(_) => (solve_ffd(history), PlanSource::Ffd, true),
        }
    };
    Ok(match opts.oracle {
        OverflowOracle::Exact => match solve_exact(history, &opts.budget) {
            Ok(out) if out.optimal => (out.plan, PlanSource::Exact, false),
            _ => rounded(true),
        },
        OverflowOracle::Approx => rounded(false),
    })
}

/// Token string of one phase: `-1` per plan slot, `+1` per online item,
/// ascending by size with arrivals before slots of equal size. Its final queue
/// length counts the online items left without a slot.
pub fn phase_tokens(history: &[Size], online: &[Size]) -> Vec<i64> {
    let mut marks: Vec<(Size, u8)> = history
        .iter()
        .map(|&s| (s, 1))
        .chain(online.iter().map(|&s| (s, 0)))
        .collect();
    marks.sort_unstable();
    marks
        .into_iter()
        .map(|(_, m)| if m == 0 { 1 } else { -1 })
        .collect()
}

pub fn run_overflow_policy(
    arrivals: &Instance,
    horizon: usize,
    opts: &OverflowOptions,
) -> Result<(PackingState, OverflowTrace), PolicyError> {
    if arrivals.len() != horizon {
        return Err(PolicyError::HorizonMismatch {
            expected: horizon,
            got: arrivals.len(),
        });
    }
    let schedule = phase_boundaries(horizon);
    let stop = opts.stop_at.unwrap_or(horizon).min(horizon);
    let items = arrivals.sizes();
    let mut state = PackingState::new(arrivals.capacity());
    let mut phases = Vec::new();
    let mut bins_eager = 0;
    if stop >= 1 {
        state.place(items[0], Placement::NewBin)?;
        bins_eager = 1;
    }
    for k in 1..=schedule.phases {
        let start = schedule.boundaries[k as usize - 1];
        let end = schedule.boundaries[k as usize];
        if start >= stop {
            break;
        }
        let history = arrivals.prefix(start);
        let (plan, source, fallback) = plan_for(&history, opts)?;
        let mut book = build_slot_book(&history, &plan)?;
        let mut opened: Vec<Option<usize>> = vec![None; plan.num_bins()];
        let mut overflow = 0;
        let last = end.min(stop);
        for &x in &items[start..last] {
            match book.vacancy_search(x) {
                Some(slot) => {
                    book.occupy(slot);
                    let pb = book.bin(slot);
                    let placement = match opened[pb] {
                        Some(b) => Placement::ExistingBin(b),
                        None => Placement::NewBin,
                    };
                    opened[pb] = Some(state.place(x, placement)?);
                }
                None => {
                    state.place(x, Placement::NewBin)?;
                    overflow += 1;
                }
            }
        }
        let queue =
            lindley_queue(&phase_tokens(history.sizes(), &items[start..last])).final_value as usize;
        bins_eager += plan.num_bins() + overflow;
        phases.push(PhaseTrace {
            phase: k,
            history: start,
            end,
            plan_bins: plan.num_bins(),
            plan_bins_opened: opened.iter().filter(|b| b.is_some()).count(),
            overflow,
            queue,
            source,
            fallback,
        });
    }
    Ok((
        state,
        OverflowTrace {
            schedule,
            phases,
            bins_eager,
        },
    ))
}
