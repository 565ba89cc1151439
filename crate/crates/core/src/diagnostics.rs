//! Run-time certificates for the curvature flow: the mean-value split,
//! the discrete Green operator, the curvature-regime partition, and the
//! per-iteration snapshot that bundles them.
//!
//! These quantities mirror the a-priori estimates behind the solver: the
//! Laplacian energy of the conformal factor, its mean value, the
//! Gauss-Bonnet defect (which the discretization keeps at roundoff for
//! every field, solution or not), and the three-region partition whose
//! `B` integrals witness where the curvature equation is elliptic,
//! dominated, or borderline. Everything here is a pure function of
//! `(geometry, target, sigma)`.

use crate::geometry::{BackgroundGeometry, GeometryError};
use crate::linsolve::{solve_spd, LinSolveError};
use crate::target::TargetCurvature;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("the Green operator requires a connected surface")]
    NotConnected,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("Green solve failed: {0}")]
    Linear(#[from] LinSolveError),
}

/// Splits a field into its area-weighted mean and the mean-zero rest.
pub fn mean_value_split(
    geom: &BackgroundGeometry,
    sigma: &[f64],
) -> Result<(f64, Vec<f64>), GeometryError> {
    let m = geom.area_mean(sigma)?;
    Ok((m, sigma.iter().map(|s| s - m).collect()))
}

/// Discrete Green operator: the unique mean-zero `x` with
/// `Delta x = f - m(f)`, computed by pinning one vertex of the stiffness
/// system `L x = -A .* (f - m(f))` and re-centering.
pub fn green_apply(
    geom: &BackgroundGeometry,
    field: &[f64],
) -> Result<Vec<f64>, DiagnosticsError> {
    if !geom.connected {
        return Err(DiagnosticsError::NotConnected);
    }
    let m = geom.area_mean(field)?;
    let rhs_full: Vec<f64> = field
        .iter()
        .zip(&geom.vertex_areas)
        .map(|(f, a)| -a * (f - m))
        .collect();

    // The full system is consistent (the right side sums to zero), so the
    // solution with vertex 0 pinned to zero solves it exactly.
    let reduced = geom.stiffness.without_row_col(0);
    let solution = solve_spd(&reduced, &rhs_full[1..])?;
    let mut x = Vec::with_capacity(geom.vertex_count);
    x.push(0.0);
    x.extend_from_slice(&solution);

    let mean = geom.area_mean(&x)?;
    for v in &mut x {
        *v -= mean;
    }
    Ok(x)
}

/// Vertex classification into the three curvature regimes.
#[derive(Debug, Clone)]
pub struct OmegaPartition {
    /// Region index per vertex: 1, 2, or 3.
    pub labels: Vec<u8>,
    /// Area of each region; sums to one.
    pub masses: [f64; 3],
    /// `B_j = sum over region j of (K^2 e^{2 sigma} + (Delta sigma) e^sigma K) A`.
    pub b_terms: [f64; 3],
    /// `max_i g_i^4` (the total area factor is one).
    pub d_squared: f64,
}

/// Classifies vertices by comparing the conformal factor's gradient
/// density `p = sqrt(density)` against the target's gradient ratio `g`:
/// region 1 where `p > g`, region 2 where `p <= g` but `|K| e^sigma`
/// dominates `g^2`, region 3 otherwise.
pub fn omega_partition(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
) -> Result<OmegaPartition, GeometryError> {
    let density = geom.dirichlet_gradient_density(sigma)?;
    let laplacian = geom.laplacian_apply(sigma)?;

    let mut labels = Vec::with_capacity(geom.vertex_count);
    let mut masses = [0.0_f64; 3];
    let mut b_terms = [0.0_f64; 3];
    let mut d_squared = 0.0_f64;

    for i in 0..geom.vertex_count {
        let p = density[i].sqrt();
        let g = target.grad_ratio[i];
        let k = target.values[i];
        let e_sigma = sigma[i].exp();

        let region = if p > g {
            0
        } else if k.abs() * e_sigma > g * g {
            1
        } else {
            2
        };
        labels.push(region as u8 + 1);
        masses[region] += geom.vertex_areas[i];
        b_terms[region] +=
            (k * k * e_sigma * e_sigma + laplacian[i] * e_sigma * k) * geom.vertex_areas[i];
        d_squared = d_squared.max(g.powi(4));
    }

    Ok(OmegaPartition { labels, masses, b_terms, d_squared })
}

/// One iteration's worth of certificates, serialized as a single JSON
/// object per line in the diagnostics trace.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsSnapshot {
    pub iteration: usize,
    /// `sum (Delta sigma)^2 A`.
    pub laplacian_energy: f64,
    /// Area-weighted mean of sigma.
    pub mean_value: f64,
    /// A-weighted L2 norm of the mean-zero part of sigma.
    pub sigma_tilde_norm: f64,
    pub omega_masses: [f64; 3],
    pub b_terms: [f64; 3],
    pub d_squared: f64,
    /// `sum K(sigma) e^sigma A - 2 pi chi`; roundoff-small for every
    /// field by the discrete Gauss-Bonnet identity.
    pub gauss_bonnet_defect: f64,
    /// `4 pi (1 - g)`, the topological constant the defect is measured
    /// against.
    pub gauss_bonnet_constant: f64,
}

/// Assembles the full snapshot for one iterate.
pub fn snapshot(
    geom: &BackgroundGeometry,
    target: &TargetCurvature,
    sigma: &[f64],
    iteration: usize,
) -> Result<DiagnosticsSnapshot, GeometryError> {
    let (mean_value, tilde) = mean_value_split(geom, sigma)?;
    let sigma_tilde_norm = tilde
        .iter()
        .zip(&geom.vertex_areas)
        .map(|(t, a)| t * t * a)
        .sum::<f64>()
        .sqrt();

    let laplacian = geom.laplacian_apply(sigma)?;
    let laplacian_energy: f64 = laplacian
        .iter()
        .zip(&geom.vertex_areas)
        .map(|(l, a)| l * l * a)
        .sum();

    let curvature = geom.curvature_of(sigma)?;
    let gauss_bonnet: f64 = curvature
        .iter()
        .zip(sigma)
        .zip(&geom.vertex_areas)
        .map(|((k, s), a)| k * s.exp() * a)
        .sum();
    let chi = geom.euler_characteristic as f64;
    let gauss_bonnet_defect = gauss_bonnet - 2.0 * std::f64::consts::PI * chi;
    let genus = geom.genus() as f64;
    let gauss_bonnet_constant = 4.0 * std::f64::consts::PI * (1.0 - genus);

    let partition = omega_partition(geom, target, sigma)?;

    Ok(DiagnosticsSnapshot {
        iteration,
        laplacian_energy,
        mean_value,
        sigma_tilde_norm,
        omega_masses: partition.masses,
        b_terms: partition.b_terms,
        d_squared: partition.d_squared,
        gauss_bonnet_defect,
        gauss_bonnet_constant,
    })
}
