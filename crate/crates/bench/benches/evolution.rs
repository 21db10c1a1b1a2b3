use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pdem_bench::Fixture;
use pdem_core::evolution::{CrankNicolson, DEFAULT_TOLERANCE};
use pdem_core::{dense_reference_step, regularize, Mollifier, MollifierKind};
use std::hint::black_box;

fn regularization(c: &mut Criterion) {
    let mut group = c.benchmark_group("regularize");
    for (d, n) in [(1, 1024), (1, 4096), (2, 64), (2, 128)] {
        let f = Fixture::new(d, 2.0, n, 0.25);
        let m = Mollifier::new(MollifierKind::Standard);
        group.bench_with_input(BenchmarkId::new(format!("{d}d"), n), &f, |b, f| {
            b.iter(|| regularize(black_box(&f.spec), &m, 0.25, &f.grid).unwrap())
        });
    }
    group.finish();
}

fn crank_nicolson(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_cn");
    for (d, n) in [(1, 512), (1, 4096), (2, 32), (2, 64)] {
        let f = Fixture::new(d, 2.0, n, 0.5);
        let dt = f.op.default_dt();
        group.bench_with_input(BenchmarkId::new(format!("{d}d"), n), &f, |b, f| {
            let mut cn = CrankNicolson::new(&f.op, DEFAULT_TOLERANCE);
            b.iter(|| cn.step(black_box(&f.u0), dt).unwrap())
        });
    }
    group.finish();
}

fn dense_oracle(c: &mut Criterion) {
    let f = Fixture::new(1, 2.0, 64, 0.25);
    let dt = f.op.default_dt();
    c.bench_function("dense_reference_step/1d/64", |b| b.iter(|| dense_reference_step(&f.op, black_box(&f.u0), dt).unwrap()));
}

criterion_group!(benches, regularization, crank_nicolson, dense_oracle);
criterion_main!(benches);
