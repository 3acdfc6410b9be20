use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pdlab_core::instance::{sample_matrix, MatrixDistribution};
use pdlab_core::linalg::{power_sigma_max, spectral_extremes};
use std::hint::black_box;

fn matvecs(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for &(m, n) in &[(25, 50), (50, 100), (128, 256)] {
        let a = sample_matrix(m, n, &MatrixDistribution::gaussian(), 1).unwrap();
        let x = vec![0.5; n];
        let y = vec![0.25; m];
        let mut out_m = vec![0.0; m];
        let mut out_n = vec![0.0; n];
        let id = format!("{m}x{n}");
        group.bench_function(BenchmarkId::new("ax", &id), |b| {
            b.iter(|| a.matvec_into(black_box(&x), &mut out_m))
        });
        group.bench_function(BenchmarkId::new("aty", &id), |b| {
            b.iter(|| a.matvec_t_into(black_box(&y), &mut out_n))
        });
    }
    group.finish();
}

fn spectra(c: &mut Criterion) {
    let a = sample_matrix(50, 100, &MatrixDistribution::gaussian(), 2).unwrap();
    c.bench_function("power_sigma_max_50x100", |b| b.iter(|| power_sigma_max(black_box(&a), 1e-6)));
    c.bench_function("spectral_extremes_50x100", |b| {
        b.iter(|| spectral_extremes(black_box(&a), 1e-6).unwrap())
    });
}

criterion_group!(benches, matvecs, spectra);
criterion_main!(benches);
