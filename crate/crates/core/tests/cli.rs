use std::path::Path;
use std::process::{Command, Output};

fn distfdr(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_distfdr"));
    cmd.args(args).env_remove("DISTFDR_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn experiment_writes_csv_with_golden_header() {
    let out = distfdr(&["experiment", "1", "--trials", "10", "--seed", "7"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let golden = std::fs::read_to_string(data("csv_header.golden")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), golden.trim_end());
    // 7 sweep values x 5 methods
    assert_eq!(csv.lines().count(), 1 + 7 * 5);
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').count(), 10, "{line}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let args = ["experiment", "3", "--trials", "1", "--seed", "11", "--methods", "no_comm,greedy"];
    let a = distfdr(&args, &[]);
    let b = distfdr(&args, &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = distfdr(&[&args[..], &["--sequential"]].concat(), &[]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = distfdr(&["experiment", "2c", "--trials", "2", "--methods", "prop_matching"], &[("DISTFDR_OUT_DIR", dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("exp_2c.csv")).unwrap();
    assert!(csv.starts_with("sweep,method,"));
    let explicit = dir.path().join("mine.csv");
    let out = distfdr(&["experiment", "2c", "--trials", "2", "--out", explicit.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(explicit.exists());
}

#[test]
fn optimal_region_of_all_null_config_is_empty() {
    let out = distfdr(&["optimal-region", "--config", &data("all_null.cfg"), "--alpha", "0.2"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fdr\t0\n"), "{text}");
    assert!(text.contains("node 1: (empty)") || !text.contains('('), "{text}");
}

#[test]
fn exit_codes() {
    assert_eq!(distfdr(&["experiment", "1", "--trails", "3"], &[]).status.code(), Some(1));
    assert_eq!(distfdr(&["experiment", "4"], &[]).status.code(), Some(1));
    assert_eq!(distfdr(&["simulate", "--config", "/no/such/file"], &[]).status.code(), Some(2));
    let out = distfdr(&["optimal-region", "--config", &data("all_null.cfg"), "--alpha", "1.5"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn bench_prints_both_strategies() {
    let out = distfdr(&["bench", "--trials", "2"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Sequential") && text.contains("Parallel"), "{text}");
}
