//! Finite-element background geometry of a closed triangulated surface.
//!
//! Everything downstream works with the normalized background metric: the
//! piecewise-flat metric induced by the embedding, rescaled so the total
//! surface area is exactly one. This module assembles the cotangent
//! stiffness matrix, barycentric vertex areas, angle defects and the
//! background curvature `K0 = defect / area`, together with the per-face
//! hat-function gradients used by the pointwise diagnostic densities.
//!
//! Sign conventions: the stiffness matrix `L` is positive semidefinite
//! with `f^T L f = sum_faces area * |grad f|^2`, and the discrete
//! Laplace-Beltrami operator is `(Delta f)_i = -(L f)_i / A_i`, so it
//! agrees in sign with the smooth operator (negative on bumps). The
//! curvature of a conformal factor `sigma` is
//! `K(sigma) = e^{-sigma} (K0 - Delta sigma / 2)`.

use crate::mesh::{cross, dot, norm, sub, TriangleMesh};
use crate::sparse::CsrMatrix;
use thiserror::Error;

/// Errors from geometry queries; assembly itself cannot fail on a mesh
/// that passed [`TriangleMesh::new`].
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("field has {found} entries but the mesh has {expected} vertices")]
    FieldLength { expected: usize, found: usize },
    #[error("conformal rescale overflowed at vertex {vertex} (sigma = {sigma})")]
    RescaleOutOfRange { vertex: usize, sigma: f64 },
}

/// Assembled finite-element data for the normalized background metric.
///
/// Vertex areas are normalized to sum to one; face areas and hat-function
/// gradients are kept in raw embedding units, which is harmless because
/// the combination `area * |grad f|^2` entering every energy is invariant
/// under uniform scaling. [`BackgroundGeometry::gradient_unit_scale`]
/// converts raw gradient magnitudes to normalized-metric ones.
#[derive(Debug, Clone)]
pub struct BackgroundGeometry {
    pub vertex_count: usize,
    pub faces: Vec<[usize; 3]>,
    /// Face areas of the raw embedding (before unit-area normalization).
    pub face_areas_raw: Vec<f64>,
    /// Gradient of each corner's hat function inside the face, raw units.
    pub face_gradients: Vec<[[f64; 3]; 3]>,
    /// Undirected edges, sorted; parallel to `cot_weights`.
    pub edges: Vec<[usize; 2]>,
    /// Cotangent weights `w_ij = (cot a + cot b) / 2`; may be negative for
    /// obtuse triangle pairs.
    pub cot_weights: Vec<f64>,
    /// Stiffness matrix: `L_ii = sum_j w_ij`, `L_ij = -w_ij`.
    pub stiffness: CsrMatrix,
    /// Barycentric vertex areas of the normalized metric; sums to one.
    pub vertex_areas: Vec<f64>,
    /// Barycentric vertex areas of the raw embedding.
    pub vertex_areas_raw: Vec<f64>,
    /// Angle defect `2 pi - angle sum` per vertex.
    pub angle_defects: Vec<f64>,
    /// Background curvature `K0_i = defect_i / A_i` (normalized areas).
    pub background_curvature: Vec<f64>,
    pub total_area_raw: f64,
    /// Per-vertex factor converting raw gradient magnitudes to the
    /// normalized background metric (`sqrt(total_area_raw)` initially; a
    /// conformal rescale makes it vary by vertex).
    pub gradient_unit_scale: Vec<f64>,
    pub euler_characteristic: i64,
    pub connected: bool,
    /// Smallest corner angle over all faces, radians.
    pub min_corner_angle: f64,
    /// Fraction of faces containing an angle above pi/2.
    pub obtuse_face_fraction: f64,
    /// Number of edges whose cotangent weight is negative.
    pub negative_weight_count: usize,
}

/// Assembles the background geometry of a validated mesh.
pub fn build_geometry(mesh: &TriangleMesh) -> BackgroundGeometry {
    let n = mesh.vertex_count();
    let positions = mesh.vertices();
    let faces: Vec<[usize; 3]> = mesh.faces().to_vec();
    let edges: Vec<[usize; 2]> = mesh.edges().to_vec();

    let mut face_areas_raw = Vec::with_capacity(faces.len());
    let mut face_gradients = Vec::with_capacity(faces.len());
    let mut cot_weights = vec![0.0_f64; edges.len()];
    let mut vertex_areas_raw = vec![0.0_f64; n];
    let mut angle_sums = vec![0.0_f64; n];
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(faces.len() * 12);
    let mut min_corner_angle = f64::INFINITY;
    let mut obtuse_faces = 0usize;

    let edge_index = |a: usize, b: usize| -> usize {
        let key = [a.min(b), a.max(b)];
        edges.binary_search(&key).expect("face edge missing from edge table")
    };

    for &[a, b, c] in &faces {
        let pa = positions[a];
        let pb = positions[b];
        let pc = positions[c];
        let ab = sub(pb, pa);
        let ac = sub(pc, pa);
        let normal = cross(ab, ac);
        let doubled = norm(normal);
        let area = 0.5 * doubled;
        face_areas_raw.push(area);

        // Hat gradient at a corner: rotate the opposite edge by 90
        // degrees in the face plane and scale by 1 / (2 area).
        let inv = 1.0 / (doubled * doubled);
        let grad_a = scale(cross(normal, sub(pc, pb)), inv);
        let grad_b = scale(cross(normal, sub(pa, pc)), inv);
        let grad_c = scale(cross(normal, sub(pb, pa)), inv);
        face_gradients.push([grad_a, grad_b, grad_c]);

        let mut obtuse = false;
        for (v, u, w) in [(a, b, c), (b, c, a), (c, a, b)] {
            let e1 = sub(positions[u], positions[v]);
            let e2 = sub(positions[w], positions[v]);
            let cross_norm = norm(cross(e1, e2));
            let dot_val = dot(e1, e2);
            let angle = cross_norm.atan2(dot_val);
            angle_sums[v] += angle;
            min_corner_angle = min_corner_angle.min(angle);
            if dot_val < 0.0 {
                obtuse = true;
            }

            // The angle at v weights the opposite edge (u, w).
            let half_cot = 0.5 * dot_val / cross_norm;
            cot_weights[edge_index(u, w)] += half_cot;
            triplets.push((u, w, -half_cot));
            triplets.push((w, u, -half_cot));
            triplets.push((u, u, half_cot));
            triplets.push((w, w, half_cot));
        }
        if obtuse {
            obtuse_faces += 1;
        }

        let third = area / 3.0;
        vertex_areas_raw[a] += third;
        vertex_areas_raw[b] += third;
        vertex_areas_raw[c] += third;
    }

    let stiffness = CsrMatrix::from_triplets(n, &triplets);
    let total_area_raw: f64 = face_areas_raw.iter().sum();
    let vertex_areas: Vec<f64> = vertex_areas_raw.iter().map(|a| a / total_area_raw).collect();

    let angle_defects: Vec<f64> =
        angle_sums.iter().map(|s| 2.0 * std::f64::consts::PI - s).collect();
    let background_curvature: Vec<f64> =
        angle_defects.iter().zip(&vertex_areas).map(|(d, a)| d / a).collect();

    let negative_weight_count = cot_weights.iter().filter(|w| **w < 0.0).count();

    BackgroundGeometry {
        vertex_count: n,
        faces,
        face_areas_raw,
        face_gradients,
        edges,
        cot_weights,
        stiffness,
        vertex_areas,
        vertex_areas_raw,
        angle_defects,
        background_curvature,
        total_area_raw,
        gradient_unit_scale: vec![total_area_raw.sqrt(); n],
        euler_characteristic: mesh.euler_characteristic(),
        connected: mesh.is_connected(),
        min_corner_angle,
        obtuse_face_fraction: obtuse_faces as f64 / mesh.face_count() as f64,
        negative_weight_count,
    }
}

impl BackgroundGeometry {
    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic) / 2
    }

    fn check_len(&self, f: &[f64]) -> Result<(), GeometryError> {
        if f.len() != self.vertex_count {
            return Err(GeometryError::FieldLength {
                expected: self.vertex_count,
                found: f.len(),
            });
        }
        Ok(())
    }

    /// Area-weighted mean `m(f) = sum_i f_i A_i` (the areas sum to one).
    pub fn area_mean(&self, f: &[f64]) -> Result<f64, GeometryError> {
        self.check_len(f)?;
        Ok(f.iter().zip(&self.vertex_areas).map(|(v, a)| v * a).sum())
    }

    /// Discrete Laplace-Beltrami operator `(Delta f)_i = -(L f)_i / A_i`.
    pub fn laplacian_apply(&self, f: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_len(f)?;
        let mut out = self.stiffness.apply(f);
        for (v, a) in out.iter_mut().zip(&self.vertex_areas) {
            *v = -*v / a;
        }
        Ok(out)
    }

    /// Curvature of the metric `e^sigma h`:
    /// `K(sigma)_i = e^{-sigma_i} (K0_i - (Delta sigma)_i / 2)`.
    pub fn curvature_of(&self, sigma: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let lap = self.laplacian_apply(sigma)?;
        Ok(self
            .background_curvature
            .iter()
            .zip(&lap)
            .zip(sigma)
            .map(|((k0, dl), s)| (k0 - 0.5 * dl) * (-s).exp())
            .collect())
    }

    /// Pointwise Dirichlet density of a vertex field in the normalized
    /// metric: `(1 / 4 A_i) sum_{faces at i} (area_f / 3) |grad f|_f^2`.
    ///
    /// The face terms are conformally invariant, so the raw face data can
    /// be used verbatim; `sum_i density_i A_i = f^T L f / 4` exactly.
    pub fn dirichlet_gradient_density(&self, f: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_len(f)?;
        let mut out = vec![0.0_f64; self.vertex_count];
        for (face, (grads, area)) in
            self.faces.iter().zip(self.face_gradients.iter().zip(&self.face_areas_raw))
        {
            let mut g = [0.0_f64; 3];
            for corner in 0..3 {
                let value = f[face[corner]];
                for d in 0..3 {
                    g[d] += value * grads[corner][d];
                }
            }
            let contribution = (area / 3.0) * dot(g, g);
            for &v in face {
                out[v] += contribution;
            }
        }
        for (v, a) in out.iter_mut().zip(&self.vertex_areas) {
            *v /= 4.0 * a;
        }
        Ok(out)
    }

    /// Magnitude of the area-averaged face gradient at each vertex, in
    /// normalized-metric units.
    pub fn vertex_gradient_magnitude(&self, f: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_len(f)?;
        let mut sums = vec![[0.0_f64; 3]; self.vertex_count];
        for (face, (grads, area)) in
            self.faces.iter().zip(self.face_gradients.iter().zip(&self.face_areas_raw))
        {
            let mut g = [0.0_f64; 3];
            for corner in 0..3 {
                let value = f[face[corner]];
                for d in 0..3 {
                    g[d] += value * grads[corner][d];
                }
            }
            let third = area / 3.0;
            for &v in face {
                for d in 0..3 {
                    sums[v][d] += third * g[d];
                }
            }
        }
        Ok(sums
            .iter()
            .zip(&self.vertex_areas_raw)
            .zip(&self.gradient_unit_scale)
            .map(|((s, a), unit)| unit * norm(*s) / a)
            .collect())
    }

    /// Background for solving relative to the metric `e^{sigma0} h / s`,
    /// where `s = sum_i e^{sigma0_i} A_i` renormalizes to unit area.
    ///
    /// Returns the rescaled geometry together with `ln s`. If `sigma''`
    /// solves the problem on the rescaled background, then
    /// `sigma = sigma0 + sigma'' - ln s` solves it on the original one.
    pub fn conformally_rescaled(
        &self,
        sigma0: &[f64],
    ) -> Result<(BackgroundGeometry, f64), GeometryError> {
        let curvature = self.curvature_of(sigma0)?;
        let mut scaled_areas = Vec::with_capacity(self.vertex_count);
        for (i, (s, a)) in sigma0.iter().zip(&self.vertex_areas).enumerate() {
            let v = s.exp() * a;
            if !v.is_finite() {
                return Err(GeometryError::RescaleOutOfRange { vertex: i, sigma: *s });
            }
            scaled_areas.push(v);
        }
        let total: f64 = scaled_areas.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(GeometryError::RescaleOutOfRange { vertex: 0, sigma: sigma0[0] });
        }

        let mut rescaled = self.clone();
        rescaled.vertex_areas = scaled_areas.iter().map(|a| a / total).collect();
        rescaled.background_curvature = curvature.iter().map(|k| k * total).collect();
        rescaled.angle_defects = rescaled
            .background_curvature
            .iter()
            .zip(&rescaled.vertex_areas)
            .map(|(k, a)| k * a)
            .collect();
        // Lengths of the rescaled metric differ from the normalized
        // background by the pointwise factor sqrt(e^{sigma0} / s), so
        // gradient magnitudes pick up the reciprocal factor.
        for (unit, s) in rescaled.gradient_unit_scale.iter_mut().zip(sigma0) {
            *unit *= (0.5 * (total.ln() - *s)).exp();
        }
        Ok((rescaled, total.ln()))
    }
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_genus_g, tetrahedron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(n: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    #[test]
    fn tetrahedron_cot_weights_and_defects() {
        let geom = build_geometry(&tetrahedron());
        // Equilateral faces: each edge weight is cot(60 deg) = 1/sqrt(3).
        for &w in &geom.cot_weights {
            assert!((w - 0.5773502691896258).abs() <= 1e-14, "weight {w}");
        }
        // Three 60-degree corners meet at each vertex: defect pi.
        for &d in &geom.angle_defects {
            assert!((d - PI).abs() <= 1e-13, "defect {d}");
        }
        assert_eq!(geom.euler_characteristic, 2);
        assert_eq!(geom.genus(), 0);
    }

    #[test]
    fn gauss_bonnet_is_exact_for_background_curvature() {
        let mesh = generate_genus_g(2, 3).unwrap();
        let geom = build_geometry(&mesh);
        let total: f64 = geom
            .background_curvature
            .iter()
            .zip(&geom.vertex_areas)
            .map(|(k, a)| k * a)
            .sum();
        let expected = 2.0 * PI * geom.euler_characteristic as f64;
        assert_eq!(geom.euler_characteristic, -2);
        assert!((total - expected).abs() <= 1e-11, "sum K0 A = {total}, expected {expected}");
    }

    #[test]
    fn vertex_areas_sum_to_one() {
        let mesh = generate_genus_g(2, 3).unwrap();
        let geom = build_geometry(&mesh);
        let total: f64 = geom.vertex_areas.iter().sum();
        assert!((total - 1.0).abs() <= 1e-13, "area sum {total}");
        assert!(geom.vertex_areas.iter().all(|a| *a > 0.0));
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let mesh = generate_genus_g(2, 2).unwrap();
        let geom = build_geometry(&mesh);
        for i in 0..geom.vertex_count {
            let (_, values) = geom.stiffness.row(i);
            let sum: f64 = values.iter().sum();
            let magnitude: f64 = values.iter().map(|v| v.abs()).sum();
            assert!(sum.abs() <= 1e-13 * magnitude.max(1.0), "row {i} sums to {sum}");
        }
    }

    #[test]
    fn stiffness_is_positive_semidefinite() {
        let mesh = generate_genus_g(2, 2).unwrap();
        let geom = build_geometry(&mesh);
        let n = geom.vertex_count;
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in geom.stiffness.entries() {
            dense[(i, j)] = v;
        }
        let eigen = nalgebra::SymmetricEigen::new(dense);
        let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eigen.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(min >= -1e-12 * max, "min eigenvalue {min}, max {max}");
    }

    #[test]
    fn dirichlet_form_matches_quadratic_form() {
        // f^T L f equals the face-sum of area * |grad f|^2, for any f.
        let mesh = generate_genus_g(2, 2).unwrap();
        let geom = build_geometry(&mesh);
        let f = random_field(geom.vertex_count, 7, -2.0, 2.0);
        let quad = geom.stiffness.quadratic_form(&f);
        let density = geom.dirichlet_gradient_density(&f).unwrap();
        let mass: f64 = density.iter().zip(&geom.vertex_areas).map(|(d, a)| d * a).sum();
        assert!(quad >= 0.0, "Dirichlet form must be nonnegative, got {quad}");
        assert!(
            (mass - 0.25 * quad).abs() <= 1e-12 * quad.max(1.0),
            "density mass {mass} vs f^T L f / 4 = {}",
            0.25 * quad
        );
    }

    /// Vertices of the generated plate whose whole 1-ring lies on the flat
    /// top face, where coordinate fields have known smooth behavior.
    fn flat_top_interior(mesh: &crate::mesh::TriangleMesh) -> Vec<usize> {
        let z_max = mesh.vertices().iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
        let n = mesh.vertex_count();
        let on_top: Vec<bool> =
            mesh.vertices().iter().map(|p| (p[2] - z_max).abs() <= 1e-12).collect();
        let mut interior = vec![true; n];
        for &[a, b] in mesh.edges() {
            if !on_top[a] {
                interior[b] = false;
            }
            if !on_top[b] {
                interior[a] = false;
            }
        }
        (0..n).filter(|&i| on_top[i] && interior[i]).collect()
    }

    #[test]
    fn flat_patch_density_of_coordinate_field_is_a_quarter() {
        let mesh = generate_genus_g(2, 4).unwrap();
        let geom = build_geometry(&mesh);
        let f: Vec<f64> = mesh.vertices().iter().map(|p| p[0]).collect();
        let density = geom.dirichlet_gradient_density(&f).unwrap();
        let magnitude = geom.vertex_gradient_magnitude(&f).unwrap();
        let flats = flat_top_interior(&mesh);
        assert!(!flats.is_empty(), "expected flat interior vertices on the plate top");
        for &i in &flats {
            assert!((density[i] - 0.25).abs() <= 1e-10, "density {} at {i}", density[i]);
            assert!((magnitude[i] - 1.0).abs() <= 1e-10, "gradient {} at {i}", magnitude[i]);
        }
    }

    #[test]
    fn laplacian_annihilates_constants_and_has_zero_mass() {
        let mesh = generate_genus_g(2, 2).unwrap();
        let geom = build_geometry(&mesh);
        let constant = vec![3.25_f64; geom.vertex_count];
        let lap = geom.laplacian_apply(&constant).unwrap();
        for (i, v) in lap.iter().enumerate() {
            assert!(v.abs() <= 1e-9, "Delta const = {v} at vertex {i}");
        }

        let f = random_field(geom.vertex_count, 11, -1.0, 1.0);
        let lap = geom.laplacian_apply(&f).unwrap();
        let mass: f64 = lap.iter().zip(&geom.vertex_areas).map(|(l, a)| l * a).sum();
        let scale: f64 = lap.iter().zip(&geom.vertex_areas).map(|(l, a)| l.abs() * a).sum();
        assert!(mass.abs() <= 1e-12 * scale.max(1.0), "Laplacian mass {mass}");
    }

    fn point_segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
        let ab = sub(b, a);
        let ap = sub(p, a);
        let t = (dot(ap, ab) / dot(ab, ab)).clamp(0.0, 1.0);
        norm([ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]])
    }

    #[test]
    fn laplacian_of_quadratic_is_exact_on_uniform_flat_stars() {
        // The cotangent Laplacian is not pointwise consistent on irregular
        // vertex stars, so no smooth value is recovered at arbitrary flat
        // vertices. It IS exact for quadratics wherever the star is a
        // uniform three-direction lattice: midpoint refinement creates
        // such stars strictly inside every original face. On the flat
        // plate top, Delta (x^2 + y^2) = 4 must then hold to roundoff.
        let base = generate_genus_g(2, 3).unwrap();
        let mesh = base.refine().refine();
        let geom = build_geometry(&mesh);
        let f: Vec<f64> = mesh.vertices().iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
        let lap = geom.laplacian_apply(&f).unwrap();

        let z_max = mesh.vertices().iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
        let base_edges: Vec<([f64; 3], [f64; 3])> = base
            .edges()
            .iter()
            .map(|&[a, b]| (base.vertices()[a], base.vertices()[b]))
            .collect();
        let mut checked = 0usize;
        for (i, p) in mesh.vertices().iter().enumerate() {
            if (p[2] - z_max).abs() > 1e-12 {
                continue;
            }
            let off_parent_edges = base_edges
                .iter()
                .all(|&(a, b)| point_segment_distance(*p, a, b) > 1e-6);
            if off_parent_edges {
                checked += 1;
                assert!(
                    (lap[i] - 4.0).abs() <= 1e-9,
                    "Delta(x^2+y^2) = {} at face-interior flat vertex {i}",
                    lap[i]
                );
            }
        }
        assert!(checked >= 100, "only {checked} face-interior flat vertices found");
    }

    #[test]
    fn curvature_of_zero_is_background_curvature() {
        let mesh = generate_genus_g(2, 2).unwrap();
        let geom = build_geometry(&mesh);
        let k = geom.curvature_of(&vec![0.0; geom.vertex_count]).unwrap();
        for (a, b) in k.iter().zip(&geom.background_curvature) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn conformal_rescale_preserves_area_and_scales_curvature() {
        let mesh = generate_genus_g(2, 2).unwrap();
        let geom = build_geometry(&mesh);
        let sigma0 = random_field(geom.vertex_count, 23, -0.8, 0.8);
        let (rescaled, ln_s) = geom.conformally_rescaled(&sigma0).unwrap();

        let area: f64 = rescaled.vertex_areas.iter().sum();
        assert!((area - 1.0).abs() <= 1e-12, "rescaled area {area}");

        let s = ln_s.exp();
        let k_sigma0 = geom.curvature_of(&sigma0).unwrap();
        for (i, (k, k0)) in rescaled.background_curvature.iter().zip(&k_sigma0).enumerate() {
            assert!(
                (k - k0 * s).abs() <= 1e-9 * (k0 * s).abs().max(1.0),
                "vertex {i}: {k} vs {}",
                k0 * s
            );
        }

        // Gauss-Bonnet carries over to the rescaled background exactly.
        let total: f64 = rescaled
            .background_curvature
            .iter()
            .zip(&rescaled.vertex_areas)
            .map(|(k, a)| k * a)
            .sum();
        let expected = 2.0 * PI * geom.euler_characteristic as f64;
        assert!((total - expected).abs() <= 1e-9, "rescaled Gauss-Bonnet {total}");
    }

    #[test]
    fn field_length_is_checked() {
        let geom = build_geometry(&tetrahedron());
        let err = geom.laplacian_apply(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, GeometryError::FieldLength { expected: 4, found: 2 }));
    }
}
