use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pslap_bench::{filtration, scale_grid, uniform_cloud};
use pslap_core::alpha::assign_filtration;
use pslap_core::geometry::delaunay;
use pslap_core::{oracle, spectra, SpectralPolicy};

fn tessellation(c: &mut Criterion) {
    let mut group = c.benchmark_group("delaunay");
    for n in [50, 200] {
        let points = uniform_cloud(7, n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, p| b.iter(|| delaunay(p, 0).unwrap()));
    }
    group.finish();
}

fn alpha_values(c: &mut Criterion) {
    let points = uniform_cloud(7, 200, 3);
    let tess = delaunay(&points, 0).unwrap();
    c.bench_function("alpha/200", |b| b.iter(|| assign_filtration(&tess, &points).unwrap()));
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    let policy = SpectralPolicy::default();
    for n in [30, 80] {
        let complex = filtration(&uniform_cloud(7, n, 3));
        let alphas = scale_grid(&complex, 8);
        for p in [0.0, 0.05] {
            group.bench_function(BenchmarkId::new(format!("n{n}"), p), |b| {
                b.iter(|| spectra::sweep(&complex, &alphas, &[0, 1, 2], p, &policy))
            });
        }
    }
    group.finish();
}

fn oracles(c: &mut Criterion) {
    let complex = filtration(&uniform_cloud(7, 40, 3));
    let alpha = scale_grid(&complex, 3)[1];
    c.bench_function("oracle/reduce", |b| b.iter(|| oracle::reduce(&complex)));
    c.bench_function("oracle/exact_rank", |b| b.iter(|| oracle::exact_rank_betti(&complex, 1, alpha, 0.02).unwrap()));
}

criterion_group!(benches, tessellation, alpha_values, sweep, oracles);
criterion_main!(benches);
