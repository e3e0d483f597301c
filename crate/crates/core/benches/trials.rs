use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use distfdr::exec::Execution;
use distfdr::expharness::{builtin_config, run_experiment, MethodKind};

fn trials(c: &mut Criterion) {
    let mut cfg = builtin_config("1").unwrap();
    cfg.grid = vec![1000.0];
    cfg.trials = 64;
    cfg.methods.retain(|&m| m != MethodKind::Optimal);
    let mut group = c.benchmark_group("experiment1_n1000_64_trials");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| run_experiment(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
