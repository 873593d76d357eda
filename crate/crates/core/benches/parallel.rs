use bgk_affine::dispersion::{count_zeros, dispersion_curve, Contour};
use bgk_affine::moments::Side;
use bgk_affine::spectrum::{residual_2_4, Continuum, PreparedExpansion, SpectralExpansion};
use bgk_affine::{Execution, GasParams, QuadratureScheme};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn scheme(a: f64) -> QuadratureScheme {
    QuadratureScheme::with_default_nodes(GasParams::new(a).unwrap())
}

fn bench_dispersion_curve(c: &mut Criterion) {
    let s = scheme(0.0);
    let xs: Vec<f64> = (0..401).map(|k| -4.0 + 8.0 * k as f64 / 400.0).collect();
    let mut group = c.benchmark_group("dispersion_curve_401");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| dispersion_curve(&s, black_box(&xs), Side::Plus, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_winding(c: &mut Criterion) {
    let s = scheme(1.0);
    let contour = Contour::nested_family(1.0, 2).unwrap().pop().unwrap();
    let mut group = c.benchmark_group("contour_winding");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| count_zeros(&s, black_box(&contour), exec).unwrap())
        });
    }
    group.finish();
}

fn bench_expansion_residual(c: &mut Criterion) {
    let s = scheme(1.0);
    let cont = Continuum::bump(s.params(), 0.05, 0.3, 1.0, 401).unwrap();
    let prepared = PreparedExpansion::new(
        &s,
        SpectralExpansion {
            discrete: [0.3, -0.2, 0.5, 0.1],
            continuum: Some(cont),
        },
        Execution::default(),
    )
    .unwrap();
    let mut group = c.benchmark_group("expansion_residual");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| residual_2_4(&s, &prepared, black_box(0.5), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_dispersion_curve, bench_winding, bench_expansion_residual);
criterion_main!(benches);
