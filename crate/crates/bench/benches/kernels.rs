use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use wavebreak_bench::{phase_points, witness_solver};
use wavebreak_core::ode::{integrate_equality, IntegrationOptions};
use wavebreak_core::threshold::{eval_g, separatrix_y, PhasePoint};

fn threshold(c: &mut Criterion) {
    let points = phase_points(1024);
    c.bench_function("eval_g/1024", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|p| eval_g(black_box(*p)).unwrap_or(0.0))
                .sum::<f64>()
        })
    });
    c.bench_function("separatrix_y/-4", |b| b.iter(|| separatrix_y(black_box(-4.0))));
}

fn ode(c: &mut Criterion) {
    let opts = IntegrationOptions::sweep();
    let mut group = c.benchmark_group("integrate_equality");
    for (name, p) in [
        ("blow_up", PhasePoint::new(-5.0, 3.5)),
        ("to_origin", PhasePoint::new(-1.0, 0.5)),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &p, |b, p| {
            b.iter(|| integrate_equality(*p, &opts))
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("whitham_step");
    group.sample_size(20);
    for n in [1024usize, 8192] {
        let (mut solver, state) = witness_solver(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solver.step(&state, 1e-4).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, threshold, ode, spectral);
criterion_main!(benches);
