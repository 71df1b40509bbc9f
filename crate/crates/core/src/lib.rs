//! Online bin packing with known horizon: the adaptive overflow policy, the
//! level-LP adaptive policy, classical baselines, offline oracles, and
//! Monte-Carlo checks of the queueing bounds behind them.

pub mod distributions;
pub mod error;
pub mod harness;
pub mod lp;
pub mod model;
pub mod oracle;
mod par;
pub mod policy;
pub mod rng;
pub mod theory;
