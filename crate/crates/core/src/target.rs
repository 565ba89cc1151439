//! Prescribed curvature targets: strictly negative vertex fields.
//!
//! A target bundles the curvature values `K_i < 0` with the pointwise
//! gradient ratio `g_i = |grad K|_i / (2 |K_i|)` used by the curvature
//! regime partition. Constructors exist for constant targets, coordinate
//! expressions evaluated at the vertices, and raw value vectors (the CSV
//! path); all of them enforce strict negativity and finiteness up front,
//! so downstream code never re-checks signs.

use crate::expr::{parse_expression, EvalError, ParseError};
use crate::geometry::BackgroundGeometry;
use crate::mesh::TriangleMesh;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("target curvature expression failed at vertex {vertex}: {source}")]
    Eval { vertex: usize, source: EvalError },
    #[error("target curvature has {found} values but the surface has {expected} vertices")]
    Length { expected: usize, found: usize },
    #[error("target curvature is not finite at vertex {vertex}")]
    NonFinite { vertex: usize },
    #[error("{}", not_negative_message(.vertices, .values))]
    NotNegative { vertices: Vec<usize>, values: Vec<f64> },
}

fn not_negative_message(vertices: &[usize], values: &[f64]) -> String {
    let shown: Vec<String> = vertices
        .iter()
        .zip(values)
        .take(8)
        .map(|(i, v)| format!("{i} (K = {v})"))
        .collect();
    let suffix = if vertices.len() > 8 {
        format!(" and {} more", vertices.len() - 8)
    } else {
        String::new()
    };
    format!(
        "target curvature must satisfy K < 0 at every vertex; violated at {} of them: {}{}",
        vertices.len(),
        shown.join(", "),
        suffix
    )
}

/// A strictly negative curvature target over the mesh vertices.
#[derive(Debug, Clone)]
pub struct TargetCurvature {
    /// Curvature values in the normalized background metric; all negative.
    pub values: Vec<f64>,
    /// `g_i = |grad K|_i / (2 |K_i|)`, normalized-metric units.
    pub grad_ratio: Vec<f64>,
}

impl TargetCurvature {
    /// Constant target `K = k` everywhere; the gradient ratio is exactly
    /// zero rather than finite-element noise.
    pub fn constant(k: f64, geom: &BackgroundGeometry) -> Result<Self, TargetError> {
        if !k.is_finite() {
            return Err(TargetError::NonFinite { vertex: 0 });
        }
        let n = geom.vertex_count;
        let values = vec![k; n];
        check_negative(&values)?;
        Ok(TargetCurvature { values, grad_ratio: vec![0.0; n] })
    }

    /// Evaluates a coordinate expression at every vertex of the embedding.
    pub fn from_expression(
        source: &str,
        mesh: &TriangleMesh,
        geom: &BackgroundGeometry,
    ) -> Result<Self, TargetError> {
        let expr = parse_expression(source)?;
        let mut values = Vec::with_capacity(mesh.vertex_count());
        for (vertex, p) in mesh.vertices().iter().enumerate() {
            let v = expr
                .eval(p[0], p[1], p[2])
                .map_err(|source| TargetError::Eval { vertex, source })?;
            values.push(v);
        }
        Self::from_values(values, geom)
    }

    /// Wraps an explicit value vector (e.g. read from a CSV column).
    pub fn from_values(
        values: Vec<f64>,
        geom: &BackgroundGeometry,
    ) -> Result<Self, TargetError> {
        if values.len() != geom.vertex_count {
            return Err(TargetError::Length {
                expected: geom.vertex_count,
                found: values.len(),
            });
        }
        if let Some(vertex) = values.iter().position(|v| !v.is_finite()) {
            return Err(TargetError::NonFinite { vertex });
        }
        check_negative(&values)?;
        let magnitude = geom
            .vertex_gradient_magnitude(&values)
            .expect("values length was checked against the geometry");
        let grad_ratio = magnitude
            .iter()
            .zip(&values)
            .map(|(m, k)| 0.5 * m / k.abs())
            .collect();
        Ok(TargetCurvature { values, grad_ratio })
    }
}

fn check_negative(values: &[f64]) -> Result<(), TargetError> {
    let vertices: Vec<usize> =
        (0..values.len()).filter(|&i| values[i] >= 0.0).collect();
    if vertices.is_empty() {
        return Ok(());
    }
    let offending = vertices.iter().map(|&i| values[i]).collect();
    Err(TargetError::NotNegative { vertices, values: offending })
}
