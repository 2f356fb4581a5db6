use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use geoagent_bench::{random_points, synthetic_grid};
use geoagent_core::geotools::geodesy::nearest;
use geoagent_core::geotools::{calculator_eval, compute_index, IndexKind};

fn calculator(c: &mut Criterion) {
    let mut g = c.benchmark_group("calculator");
    for expr in ["1+1", "sqrt((12.4-8.1)^2 + (3.3-9.07)^2) * 0.3", "max(atan2(1, 2), pow(2, 0.5)) / (1 + abs(-3.5))"] {
        g.bench_with_input(BenchmarkId::from_parameter(expr.len()), expr, |b, e| {
            b.iter(|| calculator_eval(black_box(e)).unwrap())
        });
    }
    g.finish();
}

fn nearest_neighbor(c: &mut Criterion) {
    let mut g = c.benchmark_group("nearest");
    let source = [-118.35, 34.05];
    for n in [10, 1_000, 100_000] {
        let targets = random_points(n, 7);
        g.bench_with_input(BenchmarkId::from_parameter(n), &targets, |b, t| {
            b.iter(|| nearest(black_box(source), black_box(t)))
        });
    }
    g.finish();
}

fn spectral_index(c: &mut Criterion) {
    let mut g = c.benchmark_group("compute_index");
    for side in [64, 512] {
        let grid = synthetic_grid(side, 11);
        g.bench_with_input(BenchmarkId::from_parameter(side * side), &grid, |b, grid| {
            b.iter(|| compute_index(black_box(grid), IndexKind::Nbr).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, calculator, nearest_neighbor, spectral_index);
criterion_main!(benches);
