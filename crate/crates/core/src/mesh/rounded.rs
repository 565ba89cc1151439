//! Smoothed genus-g test surface: the constant-distance offset of the
//! perforated plate solid, with exact closed-form projection.
//!
//! The plate of `generate_genus_g` is a polyhedron, so under midpoint
//! refinement every original vertex keeps its angle defect forever and the
//! refined metrics converge to a cone metric, not a smooth one. Solutions
//! of the curvature equation then drift logarithmically at the cone points
//! from level to level, which defeats mesh-convergence studies. The offset
//! surface fixes this: all points at distance `radius` from the plate solid
//! form a C^1 surface (flat faces slide outward, edges and corners grow
//! cylindrical and spherical blends), and midpoints re-projected onto it
//! have defects that shrink with the mesh size. Fields solved on the
//! projected refinement ladder therefore form a Cauchy sequence.
//!
//! Everything is computed against the plate in construction coordinates
//! ([0, g] x [0, 1], thickness 1/4, hole radius 1/4), where the nearest
//! point on the solid separates per axis and is exact: clamp z to the slab,
//! clamp (x, y) to the rectangle, push out of a hole disk radially. The
//! offset distance 1/8 balances the two smallest features, the corner
//! blends and the shrunken hole tubes, which both end up with radius 1/8.

use super::generate::raw_plate;
use super::{cross, norm, sub, MeshError, TriangleMesh};

/// The surface at constant distance [`radius`](Self::radius) from the
/// genus-g plate solid, supporting exact nearest-point projection.
///
/// Obtained from [`generate_genus_g_rounded`], which also returns a mesh of
/// the surface; [`project`](Self::project) and
/// [`refine_projected`](Self::refine_projected) keep refinements of that
/// mesh on the surface.
#[derive(Debug, Clone, Copy)]
pub struct RoundedPlateSurface {
    genus: usize,
    /// Offset distance from the plate solid, in construction coordinates
    /// where the plate is [0, g] x [0, 1] with thickness 1/4.
    pub radius: f64,
    hole_radius: f64,
    half_thickness: f64,
}

impl RoundedPlateSurface {
    fn new(genus: usize) -> Self {
        RoundedPlateSurface {
            genus,
            radius: 0.125,
            hole_radius: 0.25,
            half_thickness: 0.125,
        }
    }

    /// Nearest point of the plate solid, valid for points strictly outside
    /// it. The solid is a product of simple sets per axis, so the nearest
    /// point separates: clamp z into the slab; clamp (x, y) into the
    /// rectangle; if that lands inside a hole disk, push it out radially.
    fn foot(&self, p: [f64; 3]) -> [f64; 3] {
        let z = p[2].clamp(-self.half_thickness, self.half_thickness);
        let width = self.genus as f64;
        let mut x = p[0].clamp(0.0, width);
        let mut y = p[1].clamp(0.0, 1.0);
        if x == p[0] && y == p[1] {
            for cell in 0..self.genus {
                let cx = cell as f64 + 0.5;
                let cy = 0.5;
                let dx = p[0] - cx;
                let dy = p[1] - cy;
                let d = (dx * dx + dy * dy).sqrt();
                if d < self.hole_radius {
                    if d > 1e-12 {
                        x = cx + dx / d * self.hole_radius;
                        y = cy + dy / d * self.hole_radius;
                    } else {
                        // On the hole axis every direction ties; pick +x.
                        x = cx + self.hole_radius;
                        y = cy;
                    }
                    break;
                }
            }
        }
        [x, y, z]
    }

    /// Moves `p` to the closest point of the offset surface: the point at
    /// distance [`radius`](Self::radius) from the solid along the ray from
    /// the foot of `p` through `p`. `p` must lie strictly outside the
    /// solid, which holds for every midpoint of a mesh on the surface at
    /// the resolutions [`generate_genus_g_rounded`] accepts.
    pub fn project(&self, p: [f64; 3]) -> [f64; 3] {
        let foot = self.foot(p);
        let d = sub(p, foot);
        let len = norm(d);
        assert!(len > 1e-12, "cannot project a point on or inside the plate solid");
        [
            foot[0] + d[0] / len * self.radius,
            foot[1] + d[1] / len * self.radius,
            foot[2] + d[2] / len * self.radius,
        ]
    }

    /// Midpoint subdivision followed by projection of the new vertices onto
    /// the surface. Original vertices do not move, so a field sampled at
    /// them refers to the same surface points at every refinement level.
    pub fn refine_projected(&self, mesh: &TriangleMesh) -> TriangleMesh {
        let refined = mesh.refine();
        let inherited = mesh.vertex_count();
        let mut positions = refined.vertices().to_vec();
        for p in positions.iter_mut().skip(inherited) {
            *p = self.project(*p);
        }
        TriangleMesh::new(positions, refined.faces().to_vec())
            .expect("projected refinement of a surface mesh stays valid")
    }
}

/// Generates a closed oriented genus-`g` mesh of the rounded plate surface
/// together with the surface itself, for projected-refinement studies.
///
/// Plate vertices are pushed halfway out along their area-weighted normals
/// and projected onto the offset surface; a few dozen rounds of on-surface
/// umbrella relaxation then even out the triangle sizes the mapping
/// distorts (the flat walls stretch over the longer blended profile).
/// `resolution` must be at least 6: the relaxed collar around each corner
/// blend needs that many samples before every refinement midpoint is
/// guaranteed to stay outside the solid, where projection is defined.
pub fn generate_genus_g_rounded(
    g: usize,
    resolution: usize,
) -> Result<(TriangleMesh, RoundedPlateSurface), MeshError> {
    if resolution < 6 {
        return Err(MeshError::InvalidParameter {
            name: "resolution",
            message: "the rounded generator requires resolution >= 6".into(),
        });
    }
    let (plate_positions, faces) = raw_plate(g, resolution)?;
    let surface = RoundedPlateSurface::new(g);

    // Area-weighted vertex normals of the plate; zero-normal vertices
    // cannot occur on a closed embedded plate at these resolutions.
    let mut normals = vec![[0.0f64; 3]; plate_positions.len()];
    for &[a, b, c] in &faces {
        let n = cross(
            sub(plate_positions[b], plate_positions[a]),
            sub(plate_positions[c], plate_positions[a]),
        );
        for v in [a, b, c] {
            for axis in 0..3 {
                normals[v][axis] += n[axis];
            }
        }
    }

    let mut positions: Vec<[f64; 3]> = plate_positions
        .iter()
        .zip(&normals)
        .map(|(&p, &n)| {
            let len = norm(n);
            assert!(len > 0.0, "degenerate vertex normal on the plate");
            let step = 0.5 * surface.radius / len;
            surface.project([p[0] + step * n[0], p[1] + step * n[1], p[2] + step * n[2]])
        })
        .collect();

    // On-surface relaxation: move each vertex toward its neighbor average,
    // then project back. Projection cancels the normal component, so this
    // slides vertices along the surface toward even triangle sizes.
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); positions.len()];
    let probe = TriangleMesh::new(positions.clone(), faces.clone())?;
    for e in probe.edges() {
        neighbors[e[0]].push(e[1]);
        neighbors[e[1]].push(e[0]);
    }
    for _ in 0..40 {
        let old = positions.clone();
        for (i, around) in neighbors.iter().enumerate() {
            let mut target = [0.0f64; 3];
            for &j in around {
                for axis in 0..3 {
                    target[axis] += old[j][axis];
                }
            }
            let mut p = old[i];
            for axis in 0..3 {
                target[axis] /= around.len() as f64;
                p[axis] += 0.4 * (target[axis] - p[axis]);
            }
            positions[i] = surface.project(p);
        }
    }

    let mesh = TriangleMesh::new(positions, faces)?;
    let chi = mesh.euler_characteristic();
    assert_eq!(chi, 2 - 2 * g as i64, "rounded generator produced the wrong Euler characteristic");
    Ok((mesh, surface))
}
