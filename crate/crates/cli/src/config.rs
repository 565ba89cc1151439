//! Run configuration for the `solve` subcommand: a single JSON document
//! naming the mesh, the target curvature, the solver settings, and which
//! artifacts to write.

use prescurv::SolverConfig;
use serde::Deserialize;
use std::path::PathBuf;

/// Top-level config. Exactly one mesh source and exactly one target are
/// enforced by the enum representations.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh_source: MeshSource,
    #[serde(default)]
    pub refine_levels: usize,
    pub target: TargetSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Directory the emitted artifacts are written into (created if
    /// missing). May be omitted when `emit` is empty.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub emit: Vec<Emit>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    Generate { genus: usize, resolution: usize },
    ObjPath(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    Constant(f64),
    Expression(String),
    /// One curvature value per vertex, one per line, `#` comments allowed.
    CsvPath(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    ReportJson,
    TraceCsv,
    SigmaCsv,
    ObjWithSigma,
    DiagnosticsJsonl,
}
