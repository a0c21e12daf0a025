use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ers_core::experiment::{run_sweep, ScenarioConfig, SweepOptions};
use ers_core::par::Execution;

fn small_sweep() -> ScenarioConfig {
    ScenarioConfig {
        nodes: 25,
        duration: 30.0,
        warmup: 5.0,
        flows: 5,
        pause_times: vec![0.0],
        seeds: (1..=4).collect(),
        ..Default::default()
    }
}

fn sweep(c: &mut Criterion) {
    let cfg = small_sweep();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        let opts = SweepOptions { execution: Execution::Sequential, trace_dir: None };
        b.iter(|| black_box(run_sweep(&cfg, &opts)))
    });
    // without the `parallel` feature this falls back to the sequential path
    group.bench_function("parallel", |b| {
        let opts = SweepOptions { execution: Execution::Parallel(0), trace_dir: None };
        b.iter(|| black_box(run_sweep(&cfg, &opts)))
    });
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
