use adaptive_binpack::distributions::{DistributionSpec, Rational};
use adaptive_binpack::model::{Instance, PackingState, Placement, Size};
use adaptive_binpack::policy::{
    best_fit_step, first_fit_step, next_fit_step, phase_tokens, run_policy, sum_of_squares_step,
    PolicyKind, RunOptions, RunTrace,
};
use adaptive_binpack::theory::lindley_queue;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = Instance> {
    (2u64..=20).prop_flat_map(|cap| {
        prop::collection::vec(1..=cap, 1..40).prop_map(move |v| Instance::new(cap, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_policy_conserves_items(inst in instance(), policy in 0usize..6) {
        let p = PolicyKind::ALL[policy];
        let r = run_policy(p, &inst, inst.len(), &RunOptions::default()).unwrap();
        prop_assert!(r.state.validate(inst.sizes()).is_ok());
        prop_assert_eq!(r.state.items_placed(), inst.len());
        let loads: u128 = r.state.bins().iter().map(|b| b.load as u128).sum();
        prop_assert_eq!(loads, inst.total_size());
        prop_assert!(r.bins_used() >= inst.volume_bound());
    }

    #[test]
    fn random_step_sequences_stay_valid(cap in 2u64..=30, steps in prop::collection::vec((1u64..=30, 0usize..5), 1..120)) {
        let mut state = PackingState::new(cap);
        let mut placed = Vec::new();
        for (x, rule) in steps {
            let x = Size::new((x - 1) % cap + 1, cap).unwrap();
            let p = match rule {
                0 => best_fit_step(&state, x),
                1 => first_fit_step(&state, x),
                2 => next_fit_step(&state, x),
                3 => sum_of_squares_step(&state, x),
                // an arbitrary bin that fits, else a new one
                _ => (0..state.bins().len())
                    .rev()
                    .find(|&b| state.residual(b).unwrap() >= x.value())
                    .map_or(Placement::NewBin, Placement::ExistingBin),
            };
            state.place(x, p).unwrap();
            placed.push(x);
            prop_assert!(state.validate(&placed).is_ok());
        }
        let hist: usize = state.level_histogram().map(|(_, c)| c).sum();
        let partial = state.bins().iter().filter(|b| b.load < cap).count();
        prop_assert_eq!(hist, partial);
    }

    #[test]
    fn overflow_counts_equal_queue_lengths(inst in instance()) {
        let r = run_policy(PolicyKind::Overflow, &inst, inst.len(), &RunOptions::default()).unwrap();
        let RunTrace::Overflow(trace) = r.trace else { panic!("missing trace") };
        for ph in &trace.phases {
            let h = &inst.sizes()[..ph.history];
            let online = &inst.sizes()[ph.history..ph.end];
            let q = lindley_queue(&phase_tokens(h, online)).final_value;
            prop_assert_eq!(ph.overflow as i64, q);
            prop_assert_eq!(ph.queue as i64, q);
        }
    }

    #[test]
    fn queue_is_worst_negative_prefix(tokens in prop::collection::vec(prop::sample::select(vec![-1i64, 1]), 0..60)) {
        let run = lindley_queue(&tokens);
        let mut q = 0i64;
        for (i, &x) in tokens.iter().enumerate() {
            q = (q + x).max(0);
            prop_assert_eq!(run.trajectory[i + 1], q);
        }
        prop_assert_eq!(run.final_value, q);
        let total: i64 = tokens.iter().sum();
        if total == 0 {
            prop_assert_eq!(run.final_value, run.max_negative_partial_sum);
        }
    }

    #[test]
    fn quantiles_are_monotone(weights in prop::collection::vec(1u64..6, 1..6), t in 1u64..50) {
        let cap = 20;
        let support: Vec<u64> = (0..weights.len() as u64).map(|i| 2 + 3 * i).collect();
        let total: u64 = weights.iter().sum();
        let probs = weights.iter().map(|&w| Rational::new(w, total)).collect();
        let d = DistributionSpec::discrete(cap, support.clone(), probs).unwrap();
        let qs: Vec<u64> = (0..=t).map(|i| d.quantile(Rational::new(i, t))).collect();
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(qs[0], 0);
        prop_assert_eq!(qs[t as usize], cap);
        prop_assert!(qs[1..t as usize].iter().all(|q| support.contains(q)));
    }
}
