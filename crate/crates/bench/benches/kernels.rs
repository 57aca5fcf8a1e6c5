use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mink_bench::converged;
use mink_core::analysis::sigma_weights;
use mink_core::measure::minkowski_q;
use mink_core::quadrature::{gauss_rule, log_christoffel};
use mink_core::tridiag::tridiagonal_eigenvalues;

fn bench_eigenvalues(c: &mut Criterion) {
    let jac = converged(128);
    let mut group = c.benchmark_group("tridiagonal_eigenvalues");
    for j in [32usize, 64, 128] {
        group.bench_with_input(BenchmarkId::from_parameter(j), &j, |b, &j| {
            b.iter(|| tridiagonal_eigenvalues(black_box(&jac), j).unwrap());
        });
    }
    group.finish();
}

fn bench_log_christoffel(c: &mut Criterion) {
    let jac = converged(128);
    c.bench_function("log_christoffel_j128", |b| {
        b.iter(|| log_christoffel(black_box(&jac), black_box(0.2501), 128).unwrap());
    });
}

fn bench_gauss_rule(c: &mut Criterion) {
    let jac = converged(128);
    c.bench_function("gauss_rule_j128", |b| {
        b.iter(|| gauss_rule(black_box(&jac), 128).unwrap());
    });
}

fn bench_sigma_weights(c: &mut Criterion) {
    let jac = converged(128);
    c.bench_function("sigma_weights_j128", |b| {
        b.iter(|| sigma_weights(black_box(&jac), 128).unwrap());
    });
}

fn bench_minkowski_q(c: &mut Criterion) {
    c.bench_function("minkowski_q_double", |b| {
        b.iter(|| minkowski_q(black_box(0.7236067977499789)).unwrap());
    });
}

criterion_group!(
    benches,
    bench_eigenvalues,
    bench_log_christoffel,
    bench_gauss_rule,
    bench_sigma_weights,
    bench_minkowski_q
);
criterion_main!(benches);
