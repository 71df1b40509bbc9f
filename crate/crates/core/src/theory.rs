//! Monte-Carlo checks of the queueing and benchmark bounds: Lindley queues over
//! exchangeable token strings, the relaxation sandwich, and the quantile benchmark.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::distributions::{DistributionSpec, GroundSet, Rational};
use crate::error::OracleError;
use crate::model::{Instance, Size};
use crate::oracle::{solve_exact, solve_fractional, Budget, FractionalOptions};
use crate::rng::{mix_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueueRun {
    /// `Q_0, ..., Q_n`.
    pub trajectory: Vec<i64>,
    pub final_value: i64,
    /// `max(0, max_n -(xi_1 + ... + xi_n))`.
    pub max_negative_partial_sum: i64,
}

/// `Q_0 = 0`, `Q_n = max(0, Q_{n-1} + xi_n)`.
///
/// When the tokens sum to zero the final value equals the largest negated
/// prefix sum; this is asserted in debug builds.
pub fn lindley_queue(tokens: &[i64]) -> QueueRun {
    let mut trajectory = Vec::with_capacity(tokens.len() + 1);
    let mut q = 0i64;
    let mut partial = 0i64;
    let mut max_neg = 0i64;
    trajectory.push(0);
    for &x in tokens {
        q = (q + x).max(0);
        partial += x;
        max_neg = max_neg.max(-partial);
        trajectory.push(q);
    }
    if partial == 0 {
        debug_assert_eq!(q, max_neg);
    }
    QueueRun {
        trajectory,
        final_value: q,
        max_negative_partial_sum: max_neg,
    }
}

/// `N` tokens `+1` and `N` tokens `-1` in uniformly random order.
pub fn sign_permutation(n: usize, rng: &mut Rng) -> Vec<i64> {
    let mut t: Vec<i64> = std::iter::repeat_n(1, n)
        .chain(std::iter::repeat_n(-1, n))
        .collect();
    t.shuffle(rng);
    t
}

/// `psi_t - 1` for `(psi_1..psi_T)` multinomial with `T` trials and equal cells.
pub fn multinomial_increments(t: usize, rng: &mut Rng) -> Vec<i64> {
    let mut counts = vec![0i64; t];
    for _ in 0..t {
        counts[rng.gen_range(0..t)] += 1;
    }
    counts.into_iter().map(|c| c - 1).collect()
}

/// `eta_i - 1` for `tau` draws without replacement from `tau` colours with
/// `block` balls each.
pub fn hypergeometric_increments(tau: usize, block: usize, rng: &mut Rng) -> Vec<i64> {
    let mut counts = vec![0i64; tau];
    for ball in rand::seq::index::sample(rng, tau * block, tau) {
        counts[ball / block] += 1;
    }
    counts.into_iter().map(|c| c - 1).collect()
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn log2(x: usize) -> f64 {
    (x.max(1) as f64).log2()
}

/// Additive slack `4 log^2 n + 17 log n + 11` of the relaxation gap.
pub fn relaxation_slack(n: usize) -> f64 {
    let l = log2(n);
    4.0 * l * l + 17.0 * l + 11.0
}

/// `E[Q_2N]` under a uniformly random sign permutation, by the reflection
/// principle: `P(Q >= m) = C(2N, N+m) / C(2N, N)`.
pub fn prop2_exact_mean(n: usize) -> f64 {
    let mut ratio = 1.0;
    let mut total = 0.0;
    for m in 1..=n {
        ratio *= (n - m + 1) as f64 / (n + m) as f64;
        total += ratio;
    }
    total
}

/// Same as [`prop2_exact_mean`] in exact arithmetic, for `N <= 30`.
pub fn prop2_exact_mean_ratio(n: usize) -> Rational {
    assert!(n <= 30, "binomials overflow beyond N = 30");
    let binom = |a: u64, b: u64| (0..b).fold(1u64, |acc, i| acc * (a - i) / (i + 1));
    let n = n as u64;
    let den = binom(2 * n, n);
    (1..=n).fold(Rational::from_integer(0), |acc, m| {
        acc + Rational::new(binom(2 * n, n + m), den)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop2Report {
    pub n: usize,
    pub trials: usize,
    pub mean_q: f64,
    pub stderr: f64,
    pub exact_mean: f64,
    pub bound: f64,
    pub violation: bool,
}

pub fn verify_prop2(n: usize, trials: usize, seed: u64) -> Prop2Report {
    assert!(n >= 1 && trials >= 1);
    let qs: Vec<f64> = crate::par::par_map(trials, |i| {
        let mut rng = rng_from_seed(mix_seed(seed, i as u64));
        lindley_queue(&sign_permutation(n, &mut rng)).final_value as f64
    })
    .into_iter()
    .collect();
    let (mean_q, stderr) = mean_and_stderr(&qs);
    let bound = 2.0 * (2.0 * n as f64).sqrt();
    Prop2Report {
        n,
        trials,
        mean_q,
        stderr,
        exact_mean: prop2_exact_mean(n),
        bound,
        violation: mean_q > bound,
    }
}

fn exact_bins(instance: &Instance, budget: &Budget) -> Result<(usize, bool), OracleError> {
    let out = solve_exact(instance, budget)?;
    Ok((out.bins(), out.optimal))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop3Report {
    pub t: usize,
    pub trials: usize,
    pub mean_opt: f64,
    pub stderr: f64,
    pub quantile_opt: usize,
    pub bound: f64,
    /// Mean final queue over multinomial increment strings (diagnostic).
    pub queue_mean: f64,
    /// Trials where the exact solver stopped on its budget; their incumbent is used.
    pub inexact: usize,
    pub violation: bool,
}

/// `E[OPT(X_T)] <= OPT(F^{-1}(1/T), ..., F^{-1}(T/T)) + 2 sqrt(T)`.
pub fn verify_prop3(
    dist: &DistributionSpec,
    t: usize,
    trials: usize,
    seed: u64,
    budget: &Budget,
) -> Result<Prop3Report, OracleError> {
    let (quantile_opt, q_exact) = exact_bins(&dist.quantile_instance(t, true), budget)?;
    let runs: Vec<(usize, bool, i64)> = crate::par::par_map(trials, |i| {
        let mut rng = rng_from_seed(mix_seed(seed, i as u64));
        let x = dist.sample_iid_with(t, &mut rng);
        let (bins, exact) = exact_bins(&x, budget)?;
        let q = lindley_queue(&multinomial_increments(t, &mut rng)).final_value;
        Ok((bins, exact, q))
    })
    .into_iter()
    .collect::<Result<_, OracleError>>()?;
    let opts: Vec<f64> = runs.iter().map(|r| r.0 as f64).collect();
    let (mean_opt, stderr) = mean_and_stderr(&opts);
    let queue_mean = runs.iter().map(|r| r.2 as f64).sum::<f64>() / trials as f64;
    let bound = quantile_opt as f64 + 2.0 * (t as f64).sqrt();
    let inexact = runs.iter().filter(|r| !r.1).count() + usize::from(!q_exact);
    Ok(Prop3Report {
        t,
        trials,
        mean_opt,
        stderr,
        quantile_opt,
        bound,
        queue_mean,
        inexact,
        violation: mean_opt - 3.0 * stderr > bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop6Report {
    pub ground_size: usize,
    pub k: u32,
    pub tau: usize,
    /// Full-bin items appended so the ground set splits into `2^k` blocks.
    pub padding: usize,
    pub trials: usize,
    pub mean_opt: f64,
    pub stderr: f64,
    pub ground_opt: usize,
    pub bound: f64,
    pub queue_mean: f64,
    pub inexact: usize,
    pub violation: bool,
}

/// `E[OPT(X_tau)] <= 2^-k OPT(X'_T) + 2 sqrt(tau) + 4 log^2 tau + 17 log tau + 13`
/// for the first `tau = ceil(T / 2^k)` items of a random order.
pub fn verify_prop6(
    ground: &GroundSet,
    k: u32,
    trials: usize,
    seed: u64,
    budget: &Budget,
) -> Result<Prop6Report, OracleError> {
    let t = ground.len();
    let block = 1usize << k;
    let tau = t.div_ceil(block);
    let padding = tau * block - t;
    let cap = ground.instance().capacity();
    let mut padded = ground.instance().sizes().to_vec();
    padded.extend(std::iter::repeat_n(Size::raw(cap), padding));
    let (ground_opt, g_exact) = exact_bins(ground.instance(), budget)?;
    let runs: Vec<(usize, bool, i64)> = crate::par::par_map(trials, |i| {
        let mut rng = rng_from_seed(mix_seed(seed, i as u64));
        let mut order = padded.clone();
        order.shuffle(&mut rng);
        order.truncate(tau);
        let (bins, exact) = exact_bins(&Instance::from_sizes_unchecked(cap, order), budget)?;
        let q = lindley_queue(&hypergeometric_increments(tau, block, &mut rng)).final_value;
        Ok((bins, exact, q))
    })
    .into_iter()
    .collect::<Result<_, OracleError>>()?;
    let opts: Vec<f64> = runs.iter().map(|r| r.0 as f64).collect();
    let (mean_opt, stderr) = mean_and_stderr(&opts);
    let lt = log2(tau);
    let bound = ground_opt as f64 / block as f64
        + 2.0 * (tau as f64).sqrt()
        + 4.0 * lt * lt
        + 17.0 * lt
        + 13.0;
    Ok(Prop6Report {
        ground_size: t,
        k,
        tau,
        padding,
        trials,
        mean_opt,
        stderr,
        ground_opt,
        bound,
        queue_mean: runs.iter().map(|r| r.2 as f64).sum::<f64>() / trials as f64,
        inexact: runs.iter().filter(|r| !r.1).count() + usize::from(!g_exact),
        violation: mean_opt - 3.0 * stderr > bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichCase {
    pub n: usize,
    pub capacity: u64,
    pub opt: usize,
    pub opt_f: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Report {
    pub cases: usize,
    pub left_violations: usize,
    pub right_violations: usize,
    /// Largest `OPT - OPT_f` seen.
    pub max_gap: f64,
    pub inexact: usize,
    pub violation: bool,
}

/// One sandwich check `OPT_f <= OPT <= OPT_f + slack(n)`.
pub fn sandwich_case(
    instance: &Instance,
    budget: &Budget,
) -> Result<(SandwichCase, bool), OracleError> {
    let (opt, exact) = exact_bins(instance, budget)?;
    let f = solve_fractional(instance, &FractionalOptions::default())?;
    let case = SandwichCase {
        n: instance.len(),
        capacity: instance.capacity(),
        opt,
        opt_f: f.value,
        slack: relaxation_slack(instance.len()),
    };
    Ok((case, exact))
}

/// Random integer instances with `n <= max_n` items over capacities `2..=max_b`.
pub fn random_integer_instance(rng: &mut Rng, max_n: usize, max_b: u64) -> Instance {
    let b = rng.gen_range(2..=max_b);
    let n = rng.gen_range(1..=max_n);
    Instance::from_sizes_unchecked(b, (0..n).map(|_| Size::raw(rng.gen_range(1..b))).collect())
}

pub fn verify_prop1(cases: usize, seed: u64, budget: &Budget) -> Result<Prop1Report, OracleError> {
    let results: Vec<(SandwichCase, bool)> = crate::par::par_map(cases, |i| {
        let mut rng = rng_from_seed(mix_seed(seed, i as u64));
        sandwich_case(&random_integer_instance(&mut rng, 40, 12), budget)
    })
    .into_iter()
    .collect::<Result<_, OracleError>>()?;
    let left = results
        .iter()
        .filter(|(c, _)| c.opt_f > c.opt as f64 + 1e-6)
        .count();
    let right = results
        .iter()
        .filter(|(c, _)| c.opt as f64 > c.opt_f + c.slack)
        .count();
    let max_gap = results
        .iter()
        .map(|(c, _)| c.opt as f64 - c.opt_f)
        .fold(0.0, f64::max);
    Ok(Prop1Report {
        cases,
        left_violations: left,
        right_violations: right,
        max_gap,
        inexact: results.iter().filter(|r| !r.1).count(),
        violation: left + right > 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CePoint {
    pub t: usize,
    pub opt_f: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeReport {
    pub distribution: String,
    pub points: Vec<CePoint>,
    /// Known limit for two-point distributions.
    pub limit: Option<f64>,
}

/// `OPT_f(F^{-1}(1/T), ..., F^{-1}(T/T)) / T` on each grid point.
pub fn estimate_ce(
    dist: &DistributionSpec,
    grid: &[usize],
    opts: &FractionalOptions,
) -> Result<CeReport, OracleError> {
    assert!(
        grid.windows(2).all(|w| w[0] < w[1]),
        "grid must be ascending"
    );
    let points = grid
        .iter()
        .map(|&t| {
            let f = solve_fractional(&dist.quantile_instance(t, true), opts)?;
            Ok(CePoint {
                t,
                opt_f: f.value,
                ratio: f.value / t as f64,
            })
        })
        .collect::<Result<_, OracleError>>()?;
    let limit = matches!(dist, DistributionSpec::TwoPoint { .. }).then_some(0.5);
    Ok(CeReport {
        distribution: dist.label(),
        points,
        limit,
    })
}
