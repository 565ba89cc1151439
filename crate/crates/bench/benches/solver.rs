//! Benchmarks for the hot paths of a solve: geometry assembly, one
//! Laplacian application, the SPD factor-and-solve behind a Newton
//! step, and a full Newton run on a small problem.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prescurv::{build_geometry, newton_solve, solve_spd, residual, SolveStatus, SolverConfig};
use prescurv_bench::{constant_curvature_problem, genus_two_mesh};

fn bench_geometry_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_geometry");
    for resolution in [4usize, 8, 12] {
        let mesh = genus_two_mesh(resolution);
        group.bench_with_input(
            BenchmarkId::from_parameter(mesh.vertex_count()),
            &mesh,
            |b, mesh| b.iter(|| build_geometry(black_box(mesh))),
        );
    }
    group.finish();
}

fn bench_laplacian_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian_apply");
    for resolution in [8usize, 16] {
        let fixture = constant_curvature_problem(resolution);
        let n = fixture.geometry.vertex_count;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| fixture.geometry.laplacian_apply(black_box(f)).unwrap())
        });
    }
    group.finish();
}

fn bench_residual(c: &mut Criterion) {
    let fixture = constant_curvature_problem(8);
    let n = fixture.geometry.vertex_count;
    let sigma: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 * 0.11).cos()).collect();
    c.bench_function("residual/1246", |b| {
        b.iter(|| residual(&fixture.geometry, &fixture.target, black_box(&sigma)).unwrap())
    });
}

/// Factor and solve the Newton system `(L/2 + diag(-K e^sigma A)) d = r`
/// at `sigma = 0`, the step the iteration pays for once per accepted
/// iterate.
fn bench_newton_system(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_system_solve");
    for resolution in [8usize, 16] {
        let fixture = constant_curvature_problem(resolution);
        let geom = &fixture.geometry;
        let n = geom.vertex_count;
        let extra: Vec<f64> = (0..n)
            .map(|i| -fixture.target.values[i] * geom.vertex_areas[i])
            .collect();
        let matrix = geom.stiffness.scaled_with_diag_added(0.5, &extra);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.23).sin()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &rhs, |b, rhs| {
            b.iter(|| solve_spd(black_box(&matrix), black_box(rhs)).unwrap())
        });
    }
    group.finish();
}

fn bench_newton_end_to_end(c: &mut Criterion) {
    let fixture = constant_curvature_problem(4);
    let config = SolverConfig::default();
    c.bench_function("newton_solve/310", |b| {
        b.iter(|| {
            let report =
                newton_solve(&fixture.geometry, &fixture.target, black_box(&config)).unwrap();
            assert!(
                matches!(report.status, SolveStatus::Converged),
                "benchmark problem must converge"
            );
            report
        })
    });
}

criterion_group!(
    benches,
    bench_geometry_assembly,
    bench_laplacian_apply,
    bench_residual,
    bench_newton_system,
    bench_newton_end_to_end
);
criterion_main!(benches);
