//! Shared fixtures for the solver benchmarks.

use prescurv::{
    build_geometry, generate_genus_g, BackgroundGeometry, TargetCurvature,
};

/// A ready-to-solve constant-curvature problem on the genus-2 surface.
pub struct Fixture {
    pub geometry: BackgroundGeometry,
    pub target: TargetCurvature,
}

/// Builds the standard K = -1 problem at the given generator resolution.
pub fn constant_curvature_problem(resolution: usize) -> Fixture {
    let mesh = generate_genus_g(2, resolution).expect("generator parameters are valid");
    let geometry = build_geometry(&mesh);
    let target = TargetCurvature::constant(-1.0, &geometry).expect("-1 is negative");
    Fixture { geometry, target }
}

/// The mesh behind `constant_curvature_problem`, for benchmarks that need
/// the embedding itself.
pub fn genus_two_mesh(resolution: usize) -> prescurv::TriangleMesh {
    generate_genus_g(2, resolution).expect("generator parameters are valid")
}
