//! Solvers for the prescribed-curvature equation on a hyperbolic-type
//! closed surface: find the conformal factor `sigma` with
//! `K(e^sigma h) = K` for a strictly negative target `K`.
//!
//! The vertex residual is
//! `b_i = K0_i + (L sigma)_i / (2 A_i) - K_i e^{sigma_i}`,
//! which satisfies `b = (K(sigma) - K) e^sigma` identically, and the
//! merit functional is the weighted least squares `S = sum b_i^2 A_i`.
//! Both methods monotonically decrease `S`:
//!
//! * [`newton_solve`] solves `M delta = -(A .* b)` with
//!   `M = L/2 + diag(-K e^sigma A)` — symmetric positive definite
//!   whenever `K < 0` — and backtracks along `delta` under an Armijo
//!   test (the slope of `S` along the step is exactly `-2 S`).
//! * [`descent_minimize`] follows `-grad S = -2 M b` with
//!   Barzilai-Borwein step initialization and the same backtracking.
//!
//! Both record a full per-iteration trace and diagnostics snapshots.

use crate::diagnostics::{snapshot, DiagnosticsSnapshot};
use crate::geometry::{BackgroundGeometry, GeometryError};
use crate::linsolve::{solve_spd, LinSolveError};
use crate::sparse::CsrMatrix;
use crate::target::TargetCurvature;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Conformal factors are confined to `|sigma| <= SIGMA_LIMIT` so that
/// `e^{sigma}` and `e^{-sigma}` stay finite; line searches treat a
/// violation as a rejected step.
pub const SIGMA_LIMIT: f64 = 700.0;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("this solver requires genus g > 1; the surface has genus {genus} (Gauss-Bonnet forbids strictly negative curvature there)")]
    GenusNotHyperbolic { genus: i64 },
    #[error("the surface is not connected")]
    Disconnected,
    #[error("field has {found} entries but the surface has {expected} vertices")]
    FieldLength { expected: usize, found: usize },
    #[error("initial conformal factor is not finite at vertex {vertex}")]
    NonFiniteInitial { vertex: usize },
    #[error("conformal factor out of range at vertex {vertex} (sigma = {sigma}); the exponential overflows")]
    SigmaOutOfRange { vertex: usize, sigma: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("linear system solve failed: {0}")]
    Linear(#[from] LinSolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Newton,
    Descent,
}

/// Choice of starting iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSigma {
    /// Identically zero.
    Zeros,
    /// The constant matching total Gauss-Bonnet mass,
    /// `sigma = ln(2 pi chi / sum K A)`, when that ratio is positive;
    /// zeros otherwise.
    GaussBonnetConstant,
    /// An explicit per-vertex field.
    Field(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    /// Convergence threshold on the max-norm of the residual.
    pub residual_tol: f64,
    /// Iteration cap; `None` uses 100 for Newton, 20000 for descent.
    pub max_iterations: Option<usize>,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Line search gives up below this step size.
    pub min_step: f64,
    /// Initial Newton step scale (full step = 1).
    pub damping: f64,
    pub initial_sigma: InitialSigma,
    /// Skip the genus guard (a strictly negative target is then likely
    /// to be unattainable; the run reports non-convergence honestly).
    pub allow_any_genus: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Newton,
            residual_tol: 1e-10,
            max_iterations: None,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            min_step: 1e-14,
            damping: 1.0,
            initial_sigma: InitialSigma::Zeros,
            allow_any_genus: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

/// One accepted iterate in the run history.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub s: f64,
    pub b_inf: f64,
    /// A-weighted l2 norm of the residual, `sqrt(S)`.
    pub b_l2: f64,
    /// Accepted step length (zero on the initial row).
    pub step: f64,
    pub mean_value: f64,
    pub laplacian_energy: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub sigma: Vec<f64>,
    pub status: SolveStatus,
    /// Number of accepted iterations (trace has this many rows plus one).
    pub iterations: usize,
    pub final_b_inf: f64,
    pub final_s: f64,
    pub trace: Vec<TraceRow>,
    pub snapshots: Vec<DiagnosticsSnapshot>,
    /// Present when the run ended in line-search failure.
    pub failure_context: Option<String>,
    /// Running maximum of the Laplacian energy over the trajectory.
    pub laplacian_energy_peak: f64,
    /// The implied a-priori ceiling `4 (C^2 + 3 D^2)` with `C^2` taken
    /// from the initial `S` plus `sum K0^2 A`; reported for side-by-side
    /// comparison, not asserted.
    pub laplacian_energy_bound: f64,
}

/// Residual of the curvature equation at `sigma`.
pub fn residual(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
) -> Result<Vec<f64>, SolverError> {
    check_lengths(geom, target, sigma)?;
    check_range(sigma)?;
    let l_sigma = geom.stiffness.apply(sigma);
    Ok((0..geom.vertex_count)
        .map(|i| {
            geom.background_curvature[i] + l_sigma[i] / (2.0 * geom.vertex_areas[i])
                - target.values[i] * sigma[i].exp()
        })
        .collect())
}

/// Weighted least-squares merit `S = sum b_i^2 A_i`.
pub fn functional_value(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
) -> Result<f64, SolverError> {
    let b = residual(geom, target, sigma)?;
    Ok(weighted_square_sum(&b, &geom.vertex_areas))
}

/// Exact gradient of `S`: `2 M b` with `M = L/2 + diag(-K e^sigma A)`.
pub fn functional_gradient(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let b = residual(geom, target, sigma)?;
    let l_b = geom.stiffness.apply(&b);
    Ok((0..geom.vertex_count)
        .map(|i| {
            l_b[i]
                - 2.0 * target.values[i] * sigma[i].exp() * geom.vertex_areas[i] * b[i]
        })
        .collect())
}

/// Dispatches on `config.method`.
pub fn solve(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    config: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    match config.method {
        Method::Newton => newton_solve(geom, target, config),
        Method::Descent => descent_minimize(geom, target, config),
    }
}

fn check_lengths(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
) -> Result<(), SolverError> {
    for len in [target.values.len(), sigma.len()] {
        if len != geom.vertex_count {
            return Err(SolverError::FieldLength {
                expected: geom.vertex_count,
                found: len,
            });
        }
    }
    Ok(())
}

fn check_range(sigma: &[f64]) -> Result<(), SolverError> {
    for (vertex, &s) in sigma.iter().enumerate() {
        if s.abs() > SIGMA_LIMIT {
            return Err(SolverError::SigmaOutOfRange { vertex, sigma: s });
        }
    }
    Ok(())
}

fn weighted_square_sum(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * v * w).sum()
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Initial iterate plus structural validation shared by both methods.
fn initial_sigma(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    config: &SolverConfig,
) -> Result<Vec<f64>, SolverError> {
    if !geom.connected {
        return Err(SolverError::Disconnected);
    }
    let genus = geom.genus();
    if genus < 2 && !config.allow_any_genus {
        return Err(SolverError::GenusNotHyperbolic { genus });
    }
    if target.values.len() != geom.vertex_count {
        return Err(SolverError::FieldLength {
            expected: geom.vertex_count,
            found: target.values.len(),
        });
    }
    match &config.initial_sigma {
        InitialSigma::Zeros => Ok(vec![0.0; geom.vertex_count]),
        InitialSigma::GaussBonnetConstant => {
            let chi = geom.euler_characteristic as f64;
            let mass: f64 = target
                .values
                .iter()
                .zip(&geom.vertex_areas)
                .map(|(k, a)| k * a)
                .sum();
            let ratio = 2.0 * std::f64::consts::PI * chi / mass;
            if ratio > 0.0 && ratio.is_finite() {
                Ok(vec![ratio.ln(); geom.vertex_count])
            } else {
                Ok(vec![0.0; geom.vertex_count])
            }
        }
        InitialSigma::Field(field) => {
            if field.len() != geom.vertex_count {
                return Err(SolverError::FieldLength {
                    expected: geom.vertex_count,
                    found: field.len(),
                });
            }
            if let Some(vertex) = field.iter().position(|v| !v.is_finite()) {
                return Err(SolverError::NonFiniteInitial { vertex });
            }
            check_range(field)?;
            Ok(field.clone())
        }
    }
}

struct Evaluation {
    b: Vec<f64>,
    s: f64,
    b_inf: f64,
}

fn evaluate(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
) -> Result<Evaluation, SolverError> {
    let b = residual(geom, target, sigma)?;
    let s = weighted_square_sum(&b, &geom.vertex_areas);
    let b_inf = max_abs(&b);
    Ok(Evaluation { b, s, b_inf })
}

/// Shared run state: trace, snapshots, and the derived report numbers.
struct Recorder<'a> {
    geom: &'a BackgroundGeometry,
    target: &'a TargetCurvature,
    trace: Vec<TraceRow>,
    snapshots: Vec<DiagnosticsSnapshot>,
}

impl<'a> Recorder<'a> {
    fn new(geom: &'a BackgroundGeometry, target: &'a TargetCurvature) -> Self {
        Recorder { geom, target, trace: Vec::new(), snapshots: Vec::new() }
    }

    fn record(
        &mut self,
        iteration: usize,
        sigma: &[f64],
        eval: &Evaluation,
        step: f64,
    ) -> Result<(), SolverError> {
        let snap = snapshot(self.geom, self.target, sigma, iteration)?;
        self.trace.push(TraceRow {
            iteration,
            s: eval.s,
            b_inf: eval.b_inf,
            b_l2: eval.s.sqrt(),
            step,
            mean_value: snap.mean_value,
            laplacian_energy: snap.laplacian_energy,
        });
        self.snapshots.push(snap);
        Ok(())
    }

    fn finish(
        self,
        sigma: Vec<f64>,
        status: SolveStatus,
        iterations: usize,
        failure_context: Option<String>,
    ) -> SolveReport {
        let initial_s = self.trace.first().map(|r| r.s).unwrap_or(0.0);
        let k0_mass: f64 = self
            .geom
            .background_curvature
            .iter()
            .zip(&self.geom.vertex_areas)
            .map(|(k, a)| k * k * a)
            .sum();
        let c_squared = initial_s + k0_mass;
        let d_squared =
            self.snapshots.iter().map(|s| s.d_squared).fold(0.0_f64, f64::max);
        let peak = self
            .snapshots
            .iter()
            .map(|s| s.laplacian_energy)
            .fold(0.0_f64, f64::max);
        let last = self.trace.last().expect("at least the initial row is recorded");
        SolveReport {
            final_b_inf: last.b_inf,
            final_s: last.s,
            sigma,
            status,
            iterations,
            trace: self.trace,
            snapshots: self.snapshots,
            failure_context,
            laplacian_energy_peak: peak,
            laplacian_energy_bound: 4.0 * (c_squared + 3.0 * d_squared),
        }
    }
}

/// Backtracking Armijo search along `direction` from `sigma`.
///
/// `slope` is the directional derivative of `S` at `t = 0` (negative).
/// Returns the accepted `(t, candidate, evaluation)`, or `None` when the
/// step fell below `min_step`. Range violations reject the step rather
/// than failing the run.
#[allow(clippy::too_many_arguments)]
fn line_search(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
    direction: &[f64],
    s_current: f64,
    slope: f64,
    t_start: f64,
    config: &SolverConfig,
) -> Result<Option<(f64, Vec<f64>, Evaluation)>, SolverError> {
    let mut t = t_start;
    while t >= config.min_step {
        let candidate: Vec<f64> =
            sigma.iter().zip(direction).map(|(s, d)| s + t * d).collect();
        match evaluate(geom, target, &candidate) {
            Ok(eval) => {
                if eval.s <= s_current + config.armijo_c * t * slope {
                    return Ok(Some((t, candidate, eval)));
                }
            }
            Err(SolverError::SigmaOutOfRange { .. }) => {}
            Err(other) => return Err(other),
        }
        t *= config.backtrack_factor;
    }
    Ok(None)
}

fn newton_matrix(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
) -> CsrMatrix {
    let extra: Vec<f64> = (0..geom.vertex_count)
        .map(|i| -target.values[i] * sigma[i].exp() * geom.vertex_areas[i])
        .collect();
    geom.stiffness.scaled_with_diag_added(0.5, &extra)
}

/// Damped Newton iteration on the curvature residual.
pub fn newton_solve(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    config: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    let mut sigma = initial_sigma(geom, target, config)?;
    let max_iterations = config.max_iterations.unwrap_or(100);

    let mut eval = evaluate(geom, target, &sigma)?;
    let mut recorder = Recorder::new(geom, target);
    recorder.record(0, &sigma, &eval, 0.0)?;

    let mut status = SolveStatus::MaxIterations;
    let mut failure_context = None;
    let mut iterations = 0;

    if eval.b_inf <= config.residual_tol {
        status = SolveStatus::Converged;
    } else {
        for iteration in 1..=max_iterations {
            let matrix = newton_matrix(geom, target, sigma.as_slice());
            let rhs: Vec<f64> = eval
                .b
                .iter()
                .zip(&geom.vertex_areas)
                .map(|(b, a)| -(a * b))
                .collect();
            // Indefiniteness is a structural failure and surfaces as an
            // error; mere loss of solve accuracy happens when the iterate
            // diverges (the diagonal term collapses and M approaches the
            // singular L/2), which is a run outcome, not a caller error.
            let delta = match solve_spd(&matrix, &rhs) {
                Ok(delta) => delta,
                Err(
                    err @ (LinSolveError::ResidualTooLarge { .. }
                    | LinSolveError::Unconverged { .. }),
                ) => {
                    status = SolveStatus::LineSearchFailure;
                    failure_context = Some(format!(
                        "Newton direction solve lost accuracy at iteration \
                         {iteration}: {err} (S = {:.6e}, |b|_inf = {:.6e})",
                        eval.s, eval.b_inf
                    ));
                    break;
                }
                Err(other) => return Err(other.into()),
            };

            // The Newton direction satisfies grad S . delta = -2 S.
            let slope = -2.0 * eval.s;
            match line_search(
                geom,
                target,
                &sigma,
                &delta,
                eval.s,
                slope,
                config.damping,
                config,
            )? {
                Some((step, candidate, next_eval)) => {
                    sigma = candidate;
                    eval = next_eval;
                    iterations = iteration;
                    recorder.record(iteration, &sigma, &eval, step)?;
                    if eval.b_inf <= config.residual_tol {
                        status = SolveStatus::Converged;
                        break;
                    }
                }
                None => {
                    status = SolveStatus::LineSearchFailure;
                    failure_context = Some(format!(
                        "Armijo backtracking stalled at iteration {iteration} \
                         (S = {:.6e}, |b|_inf = {:.6e})",
                        eval.s, eval.b_inf
                    ));
                    break;
                }
            }
        }
    }

    Ok(recorder.finish(sigma, status, iterations, failure_context))
}

/// Monotone gradient descent on `S` with Barzilai-Borwein step seeding.
pub fn descent_minimize(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    config: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    let mut sigma = initial_sigma(geom, target, config)?;
    let max_iterations = config.max_iterations.unwrap_or(20_000);

    let mut eval = evaluate(geom, target, &sigma)?;
    let mut recorder = Recorder::new(geom, target);
    recorder.record(0, &sigma, &eval, 0.0)?;

    let mut status = SolveStatus::MaxIterations;
    let mut failure_context = None;
    let mut iterations = 0;

    let mut gradient = functional_gradient(geom, target, &sigma)?;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None; // (sigma, gradient)

    if eval.b_inf <= config.residual_tol {
        status = SolveStatus::Converged;
    } else {
        for iteration in 1..=max_iterations {
            let grad_norm_sq: f64 = gradient.iter().map(|g| g * g).sum();
            if grad_norm_sq == 0.0 {
                // Stationary point of S; with K < 0 this is the solution.
                status = SolveStatus::Converged;
                break;
            }

            // Barzilai-Borwein (s.s / s.y) step from the previous pair,
            // or a Cauchy-like guess on the first iteration.
            let mut t_start = match &previous {
                Some((sigma_prev, grad_prev)) => {
                    let mut s_dot_s = 0.0;
                    let mut s_dot_y = 0.0;
                    for i in 0..geom.vertex_count {
                        let s = sigma[i] - sigma_prev[i];
                        let y = gradient[i] - grad_prev[i];
                        s_dot_s += s * s;
                        s_dot_y += s * y;
                    }
                    if s_dot_y > 0.0 {
                        s_dot_s / s_dot_y
                    } else {
                        1.0
                    }
                }
                None => (eval.s / grad_norm_sq).min(1.0),
            };
            t_start = t_start.clamp(config.min_step, 1e6);

            let direction: Vec<f64> = gradient.iter().map(|g| -g).collect();
            let slope = -grad_norm_sq;
            match line_search(
                geom,
                target,
                &sigma,
                &direction,
                eval.s,
                slope,
                t_start,
                config,
            )? {
                Some((step, candidate, next_eval)) => {
                    let next_gradient = functional_gradient(geom, target, &candidate)?;
                    previous = Some((std::mem::take(&mut sigma), gradient));
                    sigma = candidate;
                    gradient = next_gradient;
                    eval = next_eval;
                    iterations = iteration;
                    recorder.record(iteration, &sigma, &eval, step)?;
                    if eval.b_inf <= config.residual_tol {
                        status = SolveStatus::Converged;
                        break;
                    }
                }
                None => {
                    status = SolveStatus::LineSearchFailure;
                    failure_context = Some(format!(
                        "gradient line search stalled at iteration {iteration} \
                         (S = {:.6e}, |b|_inf = {:.6e})",
                        eval.s, eval.b_inf
                    ));
                    break;
                }
            }
        }
    }

    Ok(recorder.finish(sigma, status, iterations, failure_context))
}
