use distfdr::exec::Execution;
use distfdr::expharness::{builtin_config, run_experiment, to_csv, ExperimentConfig, MethodKind};

#[test]
fn all_null_no_comm_controls_fdr() {
    // one node: with several nodes each local BH may reject, and the network
    // FDR under the global null approaches 1 - (1 - alpha)^N
    let text = std::fs::read_to_string(format!("{}/tests/data/all_null_single.cfg", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let cfg = ExperimentConfig::parse(&text).unwrap();
    assert_eq!(cfg.trials, 1000);
    let rows = run_experiment(&cfg, Execution::Parallel).unwrap();
    assert_eq!(rows.len(), 1);
    // under the global null FDR = P(any rejection), at most about alpha
    assert!(rows[0].fdr <= 0.25, "{:?}", rows[0]);
    assert_eq!(rows[0].power, 0.0);
}

#[test]
fn experiment1_at_1e4_controls_fdr_for_every_method() {
    let mut cfg = builtin_config("1").unwrap();
    cfg.grid = vec![10_000.0];
    cfg.trials = 100;
    let rows = run_experiment(&cfg, Execution::Parallel).unwrap();
    assert_eq!(rows.len(), MethodKind::ALL.len());
    for r in &rows {
        assert!(r.fdr <= 0.23, "{r:?}");
        assert_eq!(r.failed, 0, "{r:?}");
    }
}

#[test]
fn one_trial_twice_gives_identical_csv() {
    let mut cfg = builtin_config("2b").unwrap();
    cfg.trials = 1;
    cfg.grid.truncate(2);
    let a = to_csv(&run_experiment(&cfg, Execution::Parallel).unwrap());
    let b = to_csv(&run_experiment(&cfg, Execution::Sequential).unwrap());
    assert_eq!(a, b);
}
