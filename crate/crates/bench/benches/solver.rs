use criterion::{criterion_group, criterion_main, Criterion};
use pdlab_core::instance::{generate, GeneratorSpec};
use pdlab_core::linalg::spectral_extremes;
use pdlab_core::metrics::condition_report;
use pdlab_core::solver::{normalized_gap, one_pdhg, solve, IterateState, SolverConfig, StepSizes};
use std::hint::black_box;

fn iteration(c: &mut Criterion) {
    let inst = generate(&GeneratorSpec::gaussian(50, 100), 3).unwrap();
    let steps = StepSizes::from_extremes(&spectral_extremes(&inst.a, 1e-6).unwrap());
    let mut state = IterateState::origin(50, 100);
    c.bench_function("one_pdhg_50x100", |b| {
        b.iter(|| one_pdhg(black_box(&mut state), &inst, steps).unwrap())
    });
    let x = vec![0.3; 100];
    let y = vec![0.1; 50];
    c.bench_function("normalized_gap_50x100", |b| {
        b.iter(|| normalized_gap(&inst, black_box(&x), &y, 1.0, 1e-9).unwrap())
    });
}

fn full_solve(c: &mut Criterion) {
    let inst = generate(&GeneratorSpec::gaussian(10, 20), 5).unwrap();
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("solve");
    group.sample_size(20);
    group.bench_function("rpdhg_10x20", |b| b.iter(|| solve(black_box(&inst), &cfg).unwrap()));
    group.bench_function("condition_report_10x20", |b| {
        b.iter(|| condition_report(black_box(&inst)))
    });
    group.finish();
}

criterion_group!(benches, iteration, full_solve);
criterion_main!(benches);
