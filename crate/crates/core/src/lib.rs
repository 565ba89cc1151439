//! Prescribed negative Gaussian curvature on closed triangulated
//! surfaces of genus at least two.
//!
//! Given a triangle mesh carrying a background metric and a strictly
//! negative target curvature field `K`, the crate computes the vertex
//! conformal factor `sigma` for which the metric `e^sigma h` attains
//! `K`, using either a damped Newton iteration on the curvature
//! residual or monotone gradient descent on its least-squares energy.
//!
//! The pipeline is: build a [`TriangleMesh`] (load an OBJ file or call
//! [`generate_genus_g`]), precompute its [`BackgroundGeometry`], wrap
//! the target in a [`TargetCurvature`], and hand everything to
//! [`solve`]. The [`diagnostics`] module exposes the quantities that
//! certify a run — Green-operator identities, the curvature-region
//! partition, and the Gauss-Bonnet balance — and the solver records a
//! snapshot of them at every accepted iterate.

pub mod diagnostics;
pub mod expr;
pub mod geometry;
pub mod linsolve;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod target;

pub use diagnostics::{
    green_apply, mean_value_split, omega_partition, snapshot, DiagnosticsError,
    DiagnosticsSnapshot, OmegaPartition,
};
pub use expr::{Expr, ParseError};
pub use geometry::{build_geometry, BackgroundGeometry, GeometryError};
pub use linsolve::{solve_spd, LinSolveError};
pub use mesh::{
    generate_genus_g, generate_genus_g_rounded, load_obj, load_obj_with_scalar, save_obj,
    save_obj_with_scalar, MeshError, RoundedPlateSurface, TriangleMesh,
};
pub use solver::{
    descent_minimize, functional_gradient, functional_value, newton_solve, residual,
    solve, InitialSigma, Method, SolveReport, SolveStatus, SolverConfig, SolverError,
    TraceRow,
};
pub use sparse::CsrMatrix;
pub use target::{TargetCurvature, TargetError};
