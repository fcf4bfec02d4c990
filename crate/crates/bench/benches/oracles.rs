use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pmgauss_bench::regimes;
use pmgauss_core::decoherence::{propagate_numeric, rho_parameters};
use pmgauss_core::phase_space::{covariance, default_step, finite_diff_covariance};
use pmgauss_core::quadrature::QuadratureSpec;
use pmgauss_core::wigner::{
    coherence_half_width, spot_points, wigner_from_rho, wigner_grid, GridSpec,
};
use pmgauss_core::Param;

fn derivatives(c: &mut Criterion) {
    let (probe, env) = regimes(0.5)[1];
    c.bench_function("finite_difference", |b| {
        b.iter(|| {
            for which in Param::ALL {
                let h = default_step(&probe, &env, which);
                black_box(finite_diff_covariance(&probe, &env, black_box(1e-6), which, h).unwrap());
            }
        })
    });
}

fn propagator(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagator");
    group.sample_size(10);
    let (probe, env) = regimes(0.5)[1];
    let xs = [-1.5, -0.5, 0.0, 0.5, 1.5];
    for nodes in [60, 120] {
        let spec = QuadratureSpec::new(nodes, 1e-3).unwrap();
        group.bench_function(format!("kernel_5x5_{nodes}"), |b| {
            b.iter(|| propagate_numeric(&probe, &env, 1e-6, black_box(&xs), spec).unwrap())
        });
    }
    group.finish();
}

fn wigner(c: &mut Criterion) {
    let mut group = c.benchmark_group("wigner");
    let (probe, env) = regimes(0.0)[2];
    let t = 2.2e-6;
    let cov = covariance(&probe, &env, t).unwrap();
    let rho = rho_parameters(&probe, &env, t).unwrap();
    let sampler = |x: f64, xp: f64| rho.density_scaled(x, xp);
    let half = coherence_half_width(&cov, 10.0);
    let points = spot_points(&cov);
    group.bench_function("transform_25_points", |b| {
        b.iter(|| {
            for &p in &points {
                black_box(
                    wigner_from_rho(&sampler, p, half, 1.0, QuadratureSpec::default()).unwrap(),
                );
            }
        })
    });
    let spec = GridSpec::standard(&cov);
    group.bench_function("grid_201", |b| {
        b.iter(|| wigner_grid(black_box(&cov), &spec).unwrap())
    });
    group.finish();
}

criterion_group!(benches, derivatives, propagator, wigner);
criterion_main!(benches);
