use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use rpl_core::{
    builtin_catalog, run_simulation_in, PatternInstance, SimConfig, SolutionCandidate, SystemModel, Workload,
};

fn config(instances: Vec<PatternInstance>, trials: u64) -> SimConfig {
    SimConfig::new(
        SystemModel::fail_stop(1000.0),
        Workload::new(10_000.0),
        SolutionCandidate::bare("dynamic-state", instances),
    )
    .with_seed(42)
    .with_trials(trials)
}

fn rollback() -> PatternInstance {
    PatternInstance::new("rollback")
        .with("interval", 141.4)
        .with("checkpoint_cost", 10.0)
        .with("restart_cost", 30.0)
}

fn single_thread(c: &mut Criterion) {
    let catalog = builtin_catalog();
    let mixes = [
        ("rollback", vec![rollback()]),
        ("monitoring+rollback", vec![PatternInstance::new("monitoring"), rollback()]),
        ("tmr+rollback", vec![PatternInstance::new("n-modular-redundancy").with("N", 3.0), rollback()]),
    ];
    let trials = 100;
    let mut group = c.benchmark_group("simulate_1_thread");
    group.throughput(Throughput::Elements(trials));
    for (name, insts) in mixes {
        let cfg = config(insts, trials);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_simulation_in(cfg, &catalog, Some(1)).unwrap())
        });
    }
    group.finish();
}

fn scaling(c: &mut Criterion) {
    let catalog = builtin_catalog();
    let cfg = config(vec![rollback()], 1000);
    let mut group = c.benchmark_group("simulate_threads");
    group.sample_size(10);
    for threads in [1, 2, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, t| {
            b.iter(|| run_simulation_in(&cfg, &catalog, Some(*t)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, single_thread, scaling);
criterion_main!(benches);
