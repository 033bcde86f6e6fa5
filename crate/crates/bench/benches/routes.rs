//! Throughput of the three F_t(s) evaluation routes and the π quadrature.

use branchkit::evolve::{integral_inverse, scalar_f, series_f, survival_f};
use branchkit::PiEvaluator;
use branchkit_bench::{critical_lf, supercritical_explicit, supercritical_lf};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_scalar_routes(c: &mut Criterion) {
    let law = supercritical_explicit();
    let mut group = c.benchmark_group("scalar_routes");
    group.bench_function("ode", |b| {
        b.iter(|| scalar_f(black_box(2.0), black_box(0.3), &law, 1e-12).unwrap().value)
    });
    group.bench_function("integral_inverse", |b| {
        b.iter(|| integral_inverse(black_box(2.0), black_box(0.3), &law, 1e-12).unwrap().value)
    });
    group.bench_function("survival", |b| {
        b.iter(|| survival_f(black_box(2.0), black_box(0.7), &law, 1e-12).unwrap().value)
    });
    group.finish();
}

fn bench_series_route(c: &mut Criterion) {
    let law = supercritical_lf();
    let mut group = c.benchmark_group("series_route");
    for order in [16usize, 32, 64, 128] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, &n| {
            b.iter(|| series_f(black_box(1.0), n, &law, 1e-10).unwrap())
        });
    }
    group.finish();
}

fn bench_pi_machinery(c: &mut Criterion) {
    let sup = supercritical_lf();
    let crit = critical_lf();
    let mut group = c.benchmark_group("pi");
    group.bench_function("evaluator_build", |b| b.iter(|| PiEvaluator::new(black_box(&sup)).unwrap()));
    let pe = PiEvaluator::new(&sup).unwrap();
    group.bench_function("pi_q", |b| b.iter(|| pe.pi_q(black_box(0.3)).unwrap()));
    group.bench_function("residual_supercritical", |b| {
        b.iter(|| pe.theorem_main_residual(black_box(1.0), black_box(0.2)).unwrap())
    });
    let pe_crit = PiEvaluator::new(&crit).unwrap();
    group.bench_function("residual_critical", |b| {
        b.iter(|| pe_crit.theorem_main_residual(black_box(1.0), black_box(0.2)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_scalar_routes, bench_series_route, bench_pi_machinery);
criterion_main!(benches);
