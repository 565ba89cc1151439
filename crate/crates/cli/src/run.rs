//! Command implementations: each returns the JSON document for stdout or
//! a typed failure carrying the process exit code.

use crate::config::{Emit, MeshSource, RunConfig, TargetSpec};
use prescurv::{
    build_geometry, generate_genus_g, load_obj, save_obj, save_obj_with_scalar, solve,
    BackgroundGeometry, MeshError, SolveReport, SolveStatus, SolverConfig, SolverError,
    TargetCurvature, TargetError, TriangleMesh,
};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// A successful command invocation: the single JSON document for stdout
/// and the process exit code (nonzero when the run completed but did not
/// meet its goal, e.g. a solve that stopped short of the tolerance).
pub struct Output {
    pub body: String,
    pub code: i32,
}

impl Output {
    fn ok(body: String) -> Output {
        Output { body, code: 0 }
    }
}

/// A command failure: the exit code, a stable machine-readable kind, and a
/// human message. Printed as the stdout JSON document by `main`.
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Failure {
        Failure { code, kind, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Failure {
        Failure::new(2, "invalid_arguments", message)
    }

    pub fn io(message: impl Into<String>) -> Failure {
        Failure::new(3, "io", message)
    }

    fn topology(message: impl Into<String>) -> Failure {
        Failure::new(4, "topology", message)
    }

    fn negativity(message: impl Into<String>) -> Failure {
        Failure::new(5, "negativity", message)
    }

    fn non_convergence(message: impl Into<String>) -> Failure {
        Failure::new(6, "non_convergence", message)
    }

    fn genus_guard(message: impl Into<String>) -> Failure {
        Failure::new(7, "genus_guard", message)
    }
}

impl From<MeshError> for Failure {
    fn from(err: MeshError) -> Failure {
        match err {
            MeshError::Io { .. } => Failure::io(err.to_string()),
            MeshError::InvalidParameter { .. } => Failure::invalid(err.to_string()),
            // Parse and validation failures name the offending line or
            // element in their messages.
            _ => Failure::topology(err.to_string()),
        }
    }
}

impl From<TargetError> for Failure {
    fn from(err: TargetError) -> Failure {
        match err {
            TargetError::NotNegative { .. } => Failure::negativity(err.to_string()),
            _ => Failure::invalid(err.to_string()),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(err: SolverError) -> Failure {
        match err {
            SolverError::GenusNotHyperbolic { .. } => Failure::genus_guard(err.to_string()),
            SolverError::Disconnected => Failure::topology(err.to_string()),
            SolverError::Linear(_) => Failure::non_convergence(err.to_string()),
            _ => Failure::invalid(err.to_string()),
        }
    }
}

#[derive(Serialize)]
struct MeshSummary {
    #[serde(rename = "V")]
    vertices: usize,
    #[serde(rename = "E")]
    edges: usize,
    #[serde(rename = "F")]
    faces: usize,
    chi: i64,
    genus: usize,
}

impl MeshSummary {
    fn of(mesh: &TriangleMesh) -> Result<MeshSummary, Failure> {
        Ok(MeshSummary {
            vertices: mesh.vertex_count(),
            edges: mesh.edge_count(),
            faces: mesh.face_count(),
            chi: mesh.euler_characteristic(),
            genus: mesh.genus().map_err(Failure::from)?,
        })
    }
}

/// `generate`: write an OBJ of the genus-g surface and summarize it.
pub fn cmd_generate(genus: usize, resolution: usize, out: &Path) -> Result<Output, Failure> {
    let mesh = generate_genus_g(genus, resolution)?;
    save_obj(&mesh, out)?;
    let summary = MeshSummary::of(&mesh)?;
    Ok(Output::ok(to_json(&summary)))
}

#[derive(Serialize)]
struct CheckReport {
    #[serde(flatten)]
    mesh: MeshSummary,
    total_angle_defect: f64,
    gauss_bonnet_error: f64,
    /// Smallest corner angle over all faces, radians.
    min_angle: f64,
    obtuse_fraction: f64,
}

/// `check`: validate a mesh file and report its topological and metric
/// quality. Exit 0 requires the discrete total-curvature identity to hold
/// to 1e-9; the report is printed either way.
pub fn cmd_check(path: &Path) -> Result<Output, Failure> {
    let mesh = load_obj(path)?;
    let summary = MeshSummary::of(&mesh)?;
    let geom = build_geometry(&mesh);
    let total: f64 = geom.angle_defects.iter().sum();
    let expected = 2.0 * PI * summary.chi as f64;
    let report = CheckReport {
        mesh: summary,
        total_angle_defect: total,
        gauss_bonnet_error: total - expected,
        min_angle: geom.min_corner_angle,
        obtuse_fraction: geom.obtuse_face_fraction,
    };
    let body = to_json(&report);
    if report.gauss_bonnet_error.abs() > 1e-9 {
        eprintln!(
            "angle defects sum to {total}, off the Gauss-Bonnet value by {}",
            report.gauss_bonnet_error
        );
        return Ok(Output { body, code: 4 });
    }
    Ok(Output::ok(body))
}

#[derive(Serialize)]
struct RunReport {
    mesh: MeshSummary,
    method: prescurv::Method,
    status: SolveStatus,
    iterations: usize,
    final_b_inf: f64,
    final_s: f64,
    conformal_area: f64,
    gauss_bonnet_defect: f64,
    /// Relative gap between the conformal area and the Gauss-Bonnet value
    /// 2 pi chi / K; present only for constant targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    uniformization_check: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure_context: Option<String>,
}

/// `solve`: run the configured solve end to end. The report JSON is
/// returned even when the run stops short of the tolerance; the exit code
/// then signals non-convergence.
pub fn cmd_solve(config: RunConfig, allow_any_genus: bool) -> Result<Output, Failure> {
    let mut mesh = match &config.mesh_source {
        MeshSource::Generate { genus, resolution } => generate_genus_g(*genus, *resolution)?,
        MeshSource::ObjPath(path) => load_obj(path)?,
    };
    for _ in 0..config.refine_levels {
        mesh = mesh.refine();
    }
    let summary = MeshSummary::of(&mesh)?;
    let geom = build_geometry(&mesh);

    let mut solver_config = config.solver.clone();
    if allow_any_genus {
        solver_config.allow_any_genus = true;
    }
    if solver_config.allow_any_genus && summary.genus <= 1 {
        eprintln!(
            "warning: surface has genus {}; prescribing K < 0 is only guaranteed solvable for \
             genus g > 1, proceeding anyway",
            summary.genus
        );
    }

    let constant_value = match &config.target {
        TargetSpec::Constant(k) => Some(*k),
        _ => None,
    };
    let target = build_target(&config.target, &mesh, &geom)?;
    let report = solve(&geom, &target, &solver_config)?;

    let conformal_area: f64 = report
        .sigma
        .iter()
        .zip(&geom.vertex_areas)
        .map(|(s, a)| s.exp() * a)
        .sum();
    let gauss_bonnet_defect = report
        .snapshots
        .last()
        .map(|s| s.gauss_bonnet_defect)
        .unwrap_or(f64::NAN);
    // The Gauss-Bonnet reference area 2 pi chi / K is meaningful only for
    // constant targets on chi != 0 surfaces (it degenerates to zero on the
    // torus).
    let uniformization_check = match (constant_value, summary.chi) {
        (Some(k), chi) if chi != 0 => {
            let expected = 2.0 * PI * chi as f64 / k;
            Some((conformal_area - expected).abs() / expected)
        }
        _ => None,
    };

    let run_report = RunReport {
        mesh: summary,
        method: solver_config.method,
        status: report.status,
        iterations: report.iterations,
        final_b_inf: report.final_b_inf,
        final_s: report.final_s,
        conformal_area,
        gauss_bonnet_defect,
        uniformization_check,
        failure_context: report.failure_context.clone(),
    };
    let body = to_json(&run_report);

    if !config.emit.is_empty() {
        let dir = config.outputs.clone().ok_or_else(|| {
            Failure::invalid("config requests emitted artifacts but names no outputs directory")
        })?;
        emit_artifacts(&dir, &config.emit, &body, &mesh, &geom, &target, &report)?;
    }

    if report.status != SolveStatus::Converged {
        eprintln!(
            "solve stopped without converging: status {:?}{}",
            report.status,
            report
                .failure_context
                .as_deref()
                .map(|c| format!(" ({c})"))
                .unwrap_or_default()
        );
        // stdout still carries the full report; the exit code carries the
        // failure class.
        return Ok(Output { body, code: 6 });
    }
    Ok(Output::ok(body))
}

/// `uniformize`: solve with K = -1 and Newton defaults, writing the report,
/// the sigma CSV, and the OBJ with the solved factor into `out`.
pub fn cmd_uniformize(mesh_path: &Path, out: &Path, allow_any_genus: bool) -> Result<Output, Failure> {
    let config = RunConfig {
        mesh_source: MeshSource::ObjPath(mesh_path.to_path_buf()),
        refine_levels: 0,
        target: TargetSpec::Constant(-1.0),
        solver: SolverConfig::default(),
        outputs: Some(out.to_path_buf()),
        emit: vec![Emit::ReportJson, Emit::SigmaCsv, Emit::ObjWithSigma],
    };
    cmd_solve(config, allow_any_genus)
}

fn build_target(
    spec: &TargetSpec,
    mesh: &TriangleMesh,
    geom: &BackgroundGeometry,
) -> Result<TargetCurvature, Failure> {
    match spec {
        TargetSpec::Constant(k) => Ok(TargetCurvature::constant(*k, geom)?),
        TargetSpec::Expression(text) => Ok(TargetCurvature::from_expression(text, mesh, geom)?),
        TargetSpec::CsvPath(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::io(format!("failed to read {}: {e}", path.display())))?;
            let mut values = Vec::new();
            for (number, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let value: f64 = line.parse().map_err(|e| {
                    Failure::invalid(format!(
                        "{}:{}: expected one curvature value per line: {e}",
                        path.display(),
                        number + 1
                    ))
                })?;
                values.push(value);
            }
            Ok(TargetCurvature::from_values(values, geom)?)
        }
    }
}

fn emit_artifacts(
    dir: &PathBuf,
    emit: &[Emit],
    report_body: &str,
    mesh: &TriangleMesh,
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    report: &SolveReport,
) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::io(format!("failed to create {}: {e}", dir.display())))?;
    let write = |name: &str, contents: &str| -> Result<(), Failure> {
        let path = dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::io(format!("failed to write {}: {e}", path.display())))
    };

    for kind in emit {
        match kind {
            Emit::ReportJson => write("report.json", &format!("{report_body}\n"))?,
            Emit::TraceCsv => {
                let mut csv =
                    String::from("iteration,S,b_inf,b_l2,step,mean_value,laplacian_energy\n");
                for row in &report.trace {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        row.iteration,
                        row.s,
                        row.b_inf,
                        row.b_l2,
                        row.step,
                        row.mean_value,
                        row.laplacian_energy
                    ));
                }
                write("trace.csv", &csv)?;
            }
            Emit::SigmaCsv => {
                let achieved = geom
                    .curvature_of(&report.sigma)
                    .map_err(|e| Failure::invalid(e.to_string()))?;
                let b = prescurv::residual(geom, target, &report.sigma)
                    .map_err(|e| Failure::invalid(e.to_string()))?;
                let mut csv = String::from("vertex_index,sigma,K_target,K_achieved,b\n");
                for i in 0..geom.vertex_count {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        i, report.sigma[i], target.values[i], achieved[i], b[i]
                    ));
                }
                write("sigma.csv", &csv)?;
            }
            Emit::ObjWithSigma => {
                save_obj_with_scalar(mesh, &report.sigma, dir.join("sigma.obj"))?;
            }
            Emit::DiagnosticsJsonl => {
                let mut lines = String::new();
                for snapshot in &report.snapshots {
                    lines.push_str(&serde_json::to_string(snapshot).expect("snapshot serializes"));
                    lines.push('\n');
                }
                write("diagnostics.jsonl", &lines)?;
            }
        }
    }
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}
