//! Online policies and a common driver.

pub mod baselines;
pub mod lp_adaptive;
pub mod overflow;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::model::{Instance, PackingState, Placement, Size};

pub use baselines::{best_fit_step, first_fit_step, next_fit_step, sum_of_squares_step};
pub use lp_adaptive::{
    build_level_lp, mode_level, run_lp_adaptive_policy, select_level, LevelRule, static_level_lp, LevelLpModel,
    LpAdaptiveTrace,
};
pub use overflow::{
    build_slot_book, phase_boundaries, phase_tokens, run_overflow_policy, OverflowOptions,
    OverflowOracle, OverflowTrace, PhaseSchedule, PhaseTrace, PlanSource, SlotBook,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Overflow,
    LpAdaptive,
    BestFit,
    FirstFit,
    NextFit,
    SumOfSquares,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Overflow,
        PolicyKind::LpAdaptive,
        PolicyKind::BestFit,
        PolicyKind::FirstFit,
        PolicyKind::NextFit,
        PolicyKind::SumOfSquares,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Overflow => "overflow",
            PolicyKind::LpAdaptive => "lp-adaptive",
            PolicyKind::BestFit => "best-fit",
            PolicyKind::FirstFit => "first-fit",
            PolicyKind::NextFit => "next-fit",
            PolicyKind::SumOfSquares => "sum-of-squares",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overflow: OverflowOptions,
    /// Seed of the policy's own randomness (only the level-LP policy uses it).
    pub seed: u64,
    pub level_rule: LevelRule,
    pub stop_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunTrace {
    None,
    Overflow(OverflowTrace),
    LpAdaptive(LpAdaptiveTrace),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub horizon: usize,
    pub items: usize,
    pub state: PackingState,
    pub trace: RunTrace,
}

impl RunResult {
    pub fn bins_used(&self) -> usize {
        self.state.bins_used()
    }
}

fn run_steps(
    arrivals: &[Size],
    capacity: u64,
    step: impl Fn(&PackingState, Size) -> Placement,
) -> Result<PackingState, PolicyError> {
    let mut state = PackingState::new(capacity);
    for &x in arrivals {
        let p = step(&state, x);
        state.place(x, p)?;
    }
    Ok(state)
}

/// Runs `policy` on `arrivals`, which must hold exactly `horizon` items.
pub fn run_policy(
    policy: PolicyKind,
    arrivals: &Instance,
    horizon: usize,
    opts: &RunOptions,
) -> Result<RunResult, PolicyError> {
    if arrivals.len() != horizon {
        return Err(PolicyError::HorizonMismatch {
            expected: horizon,
            got: arrivals.len(),
        });
    }
    let stop = opts.stop_at.unwrap_or(horizon).min(horizon);
    let prefix = &arrivals.sizes()[..stop];
    let cap = arrivals.capacity();
    let (state, trace) = match policy {
        PolicyKind::Overflow => {
            let o = OverflowOptions {
                stop_at: Some(stop),
                ..opts.overflow.clone()
            };
            let (s, t) = run_overflow_policy(arrivals, horizon, &o)?;
            (s, RunTrace::Overflow(t))
        }
        PolicyKind::LpAdaptive => {
            let (s, t) = run_lp_adaptive_policy(arrivals, horizon, opts.seed, opts.level_rule, Some(stop))?;
            (s, RunTrace::LpAdaptive(t))
        }
        PolicyKind::BestFit => (run_steps(prefix, cap, best_fit_step)?, RunTrace::None),
        PolicyKind::FirstFit => (run_steps(prefix, cap, first_fit_step)?, RunTrace::None),
        PolicyKind::NextFit => (run_steps(prefix, cap, next_fit_step)?, RunTrace::None),
        PolicyKind::SumOfSquares => (run_steps(prefix, cap, sum_of_squares_step)?, RunTrace::None),
    };
    Ok(RunResult {
        policy,
        horizon,
        items: stop,
        state,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.name().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("worst-fit".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn every_policy_produces_a_valid_state() {
        let i = Instance::new(10, [3, 7, 5, 5, 2, 8, 4, 6, 1, 9, 3, 3]).unwrap();
        for p in PolicyKind::ALL {
            let r = run_policy(p, &i, i.len(), &RunOptions::default()).unwrap();
            r.state.validate(i.sizes()).unwrap();
            assert!(r.bins_used() >= 6, "{p}");
        }
    }

    #[test]
    fn stop_at_truncates() {
        let i = Instance::new(10, [3, 7, 5, 5, 2, 8]).unwrap();
        for p in PolicyKind::ALL {
            let r = run_policy(
                p,
                &i,
                6,
                &RunOptions {
                    stop_at: Some(3),
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(r.state.items_placed(), 3, "{p}");
        }
    }
}
