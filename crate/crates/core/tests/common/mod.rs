use adaptive_binpack::model::Instance;

/// Fewest bins over all set partitions (restricted growth strings), pruned by capacity.
pub fn brute_force_opt(inst: &Instance) -> usize {
    fn go(i: usize, sizes: &[u64], cap: u64, loads: &mut Vec<u64>, best: &mut usize) {
        if loads.len() >= *best {
            return;
        }
        if i == sizes.len() {
            *best = loads.len();
            return;
        }
        for b in 0..loads.len() {
            if loads[b] + sizes[i] <= cap {
                loads[b] += sizes[i];
                go(i + 1, sizes, cap, loads, best);
                loads[b] -= sizes[i];
            }
        }
        loads.push(sizes[i]);
        go(i + 1, sizes, cap, loads, best);
        loads.pop();
    }
    let sizes: Vec<u64> = inst.values().collect();
    let mut best = sizes.len() + 1;
    go(0, &sizes, inst.capacity(), &mut Vec::new(), &mut best);
    best.min(sizes.len())
}
