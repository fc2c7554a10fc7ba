use std::hint::black_box;

use bclab_core::finite_size::finite_size_law;
use bclab_core::phase::first_order_k_uncached;
use bclab_core::sequences::{limit_constant, EvenPolynomial};
use bclab_core::{thermo_magnetization, ModelParams, QuadratureConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn finite_size(c: &mut Criterion) {
    let p = ModelParams::new(1.0, 1.5).unwrap();
    let mut g = c.benchmark_group("finite_size_law");
    for n in [1000usize, 4000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| finite_size_law(black_box(n), p).unwrap())
        });
    }
    g.finish();
}

fn thermodynamics(c: &mut Criterion) {
    let p = ModelParams::new(1.0, 1.5).unwrap();
    c.bench_function("thermo_magnetization", |b| b.iter(|| thermo_magnetization(black_box(p))));
    c.bench_function("first_order_k_uncached", |b| {
        b.iter(|| first_order_k_uncached(black_box(2.0)).unwrap())
    });
}

fn limits(c: &mut Criterion) {
    let q = QuadratureConfig::default();
    let g = EvenPolynomial::new(0.625, -0.75, 0.225).unwrap();
    c.bench_function("limit_constant_sextic", |b| {
        b.iter(|| limit_constant(black_box(&g), &q).unwrap())
    });
}

criterion_group!(benches, finite_size, thermodynamics, limits);
criterion_main!(benches);
