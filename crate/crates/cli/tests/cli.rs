use std::path::Path;
use std::process::{Command, Output};

fn binpack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binpack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = binpack(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn oracle_plan_is_a_valid_optimal_packing() {
    let dir = tempfile::tempdir().unwrap();
    // volume 30 over capacity 10, so three bins are optimal
    let sizes = [6u64, 4, 5, 5, 3, 7];
    let body: String = sizes.iter().map(|s| format!("{s}\n")).collect();
    let inst = write(dir.path(), "i.txt", &format!("capacity 10\n{body}"));
    let text = stdout(&["oracle", &inst, "--mode", "exact", "--plan"]);
    assert!(text.contains("objective 3\n") && text.contains("optimal true"), "{text}");
    let mut loads = [0u64; 3];
    let mut seen = 0;
    for line in text.lines().filter(|l| l.contains("->")) {
        let (id, bin) = line.split_once(" -> ").unwrap();
        loads[bin.parse::<usize>().unwrap()] += sizes[id.parse::<usize>().unwrap()];
        seen += 1;
    }
    assert_eq!(seen, sizes.len());
    assert_eq!(loads, [10, 10, 10]);

    let text = stdout(&["oracle", &inst, "--mode", "fractional"]);
    assert!(text.contains("objective 3.000000000"), "{text}");
    let text = stdout(&["oracle", &inst, "--mode", "ffd"]);
    assert!(text.contains("objective 3\n"), "{text}");
}

#[test]
fn bench_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        stdout(&[
            "bench", "--dist", "bounded-waste", "--T", "20,50", "--trials", "3",
            "--seed", "11", "--out", out.to_str().unwrap(),
        ]);
    }
    let a = std::fs::read(&a).unwrap();
    assert_eq!(a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("policy,dist,T,trial,seed,bins,opt,opt_f,regret,runtime_ms\n"));
    // six policies, two horizons, three trials
    assert_eq!(text.lines().count(), 1 + 6 * 2 * 3);
}

#[test]
fn config_file_mirrors_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "seed = 5\n[bench]\npolicies = [\"best-fit\", \"overflow\"]\ndist = \"pairs\"\nT = [10, 20]\ntrials = 2\n",
    );
    let from_file = stdout(&["bench", "--config", &cfg]);
    let from_flags = stdout(&[
        "bench", "--policies", "best-fit,overflow", "--dist", "pairs", "--T", "10,20",
        "--trials", "2", "--seed", "5",
    ]);
    assert_eq!(from_file, from_flags);
    let overridden = stdout(&["bench", "--config", &cfg, "--seed", "6"]);
    assert_ne!(overridden, from_file);
    assert_eq!(overridden.lines().count(), from_file.lines().count());
}

#[test]
fn a_bench_row_replays_through_run() {
    let csv = stdout(&[
        "bench", "--policies", "lp-adaptive", "--dist", "linear-waste", "--T", "40",
        "--trials", "2", "--seed", "3",
    ]);
    for row in csv.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        let json = stdout(&["run", "--policy", "lp-adaptive", "--dist", "linear-waste", "--T", "40", "--seed", f[4]]);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["bins"].to_string(), f[5]);
        assert_eq!(v["reference"]["opt"].to_string(), f[6]);
    }
}

#[test]
fn run_trace_has_phases_and_consistent_counts() {
    let json = stdout(&["run", "--policy", "overflow", "--dist", "perfectly-packable", "--T", "64", "--seed", "9"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let phases = v["trace"]["phases"].as_array().unwrap();
    // ceil(log2 64) phases after the first item
    assert_eq!(phases.len(), 6);
    let opened: u64 = phases
        .iter()
        .map(|p| p["plan_bins_opened"].as_u64().unwrap() + p["overflow"].as_u64().unwrap())
        .sum();
    assert_eq!(opened + 1, v["bins"].as_u64().unwrap());
    let loads: u64 = v["loads"].as_array().unwrap().iter().map(|l| l.as_u64().unwrap()).sum();
    assert!(loads <= 10 * v["bins"].as_u64().unwrap());
    assert!(v["regret"].as_f64().unwrap() >= 0.0);
}

#[test]
fn verify_reports_one_line_per_point() {
    let text = stdout(&["verify", "--check", "prop2", "--N", "5,10", "--trials", "400", "--seed", "2"]);
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(l["check"], "prop2");
        assert_eq!(l["verdict"], "pass");
        assert!(l["statistic"].as_f64().unwrap() <= l["bound"].as_f64().unwrap());
    }
    let text = stdout(&["verify", "--check", "ce", "--T", "16,64,256"]);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.contains("\"verdict\":\"pass\"")));
}

#[test]
fn bad_input_is_an_error() {
    assert_eq!(binpack(&["run", "--policy", "nope", "--T", "5", "--dist", "uniform"]).status.code(), Some(2));
    assert_eq!(binpack(&["run", "--T", "5"]).status.code(), Some(2));
    assert_eq!(binpack(&["bench", "--T", "20,10"]).status.code(), Some(2));
}
