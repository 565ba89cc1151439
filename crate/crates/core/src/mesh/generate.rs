//! Genus-g test surface: the boundary of a rectangular plate with g
//! circular holes drilled through it on a horizontal line.
//!
//! The plate occupies [0, g] x [0, 1] in the xy-plane with thickness 1/4;
//! each unit cell [i, i+1] x [0, 1] carries one hole of radius 1/4 at its
//! center. The top and bottom of a cell are meshed as an O-grid annulus
//! between the hole circle and the cell boundary, with the circle sampled
//! so that samples 0, k, 2k, 3k point at the cell corners; radial layers
//! interpolate linearly outward to a uniform boundary lattice shared
//! between neighboring cells. Hole walls and the outer wall are vertical
//! triangle strips. The result is finally rescaled to unit total surface
//! area, so coordinate-based curvature expressions and the unit-area
//! normalization agree on generated meshes.

use super::{face_area, MeshError, TriangleMesh};
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Top { cell: usize, layer: usize, around: usize },
    Bottom { cell: usize, layer: usize, around: usize },
    TopLattice { ix: usize, iy: usize },
    BottomLattice { ix: usize, iy: usize },
    HoleWall { cell: usize, ring: usize, around: usize },
    OuterWall { ring: usize, along: usize },
}

struct Builder {
    positions: Vec<[f64; 3]>,
    index: HashMap<Key, usize>,
}

impl Builder {
    fn vertex(&mut self, key: Key, position: [f64; 3]) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.positions.len();
        self.positions.push(position);
        self.index.insert(key, i);
        i
    }
}

/// Generates a closed oriented surface of genus exactly `g`.
///
/// `resolution` is the number of lattice segments along each unit cell
/// edge; faces grow roughly with its square.
pub fn generate_genus_g(g: usize, resolution: usize) -> Result<TriangleMesh, MeshError> {
    let (mut positions, faces) = raw_plate(g, resolution)?;

    // Rescale to unit total area so the raw embedding and the normalized
    // background metric coincide.
    let total_area: f64 = faces.iter().map(|&f| face_area(&positions, f)).sum();
    let scale = 1.0 / total_area.sqrt();
    for p in &mut positions {
        for c in p.iter_mut() {
            *c *= scale;
        }
    }

    let mesh = TriangleMesh::new(positions, faces)?;
    let chi = mesh.euler_characteristic();
    assert_eq!(chi, 2 - 2 * g as i64, "generator produced the wrong Euler characteristic");
    Ok(mesh)
}

/// Plate vertices and faces in construction coordinates: the solid occupies
/// [0, g] x [0, 1] with thickness 1/4 around z = 0 and hole radius 1/4.
/// `generate_genus_g` rescales this to unit area; the rounded variant keeps
/// the raw coordinates so the offset solid has exact known parameters.
pub(super) fn raw_plate(
    g: usize,
    resolution: usize,
) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>), MeshError> {
    if g < 1 {
        return Err(MeshError::InvalidParameter {
            name: "genus",
            message: "the generator requires g >= 1".into(),
        });
    }
    if resolution < 2 {
        return Err(MeshError::InvalidParameter {
            name: "resolution",
            message: "the generator requires resolution >= 2".into(),
        });
    }

    let k = resolution;
    let m = 4 * k; // angular samples around each hole
    let d = 1.0; // hole spacing = cell edge
    let radius = d / 4.0;
    let thickness = d / 4.0;
    let n_wall = ((k as f64 / 4.0).round() as usize).max(1);
    let top_z = thickness / 2.0;
    let bottom_z = -thickness / 2.0;

    let lattice_pos = |ix: usize, iy: usize| [ix as f64 * d / k as f64, iy as f64 * d / k as f64];
    // Boundary lattice coordinates of angular sample `a`, walking the cell
    // boundary counterclockwise from the lower-right corner.
    let lattice_of = |cell: usize, a: usize| -> (usize, usize) {
        let (side, j) = (a / k, a % k);
        match side {
            0 => ((cell + 1) * k, j),
            1 => ((cell + 1) * k - j, k),
            2 => (cell * k, k - j),
            _ => (cell * k + j, 0),
        }
    };
    let circle_point = |cell: usize, a: usize| -> [f64; 2] {
        let theta = -PI / 4.0 + 2.0 * PI * a as f64 / m as f64;
        let cx = (cell as f64 + 0.5) * d;
        let cy = 0.5 * d;
        [cx + radius * theta.cos(), cy + radius * theta.sin()]
    };
    // Layer 0 is the hole circle, layer k the cell boundary lattice.
    let ring_point = |cell: usize, layer: usize, a: usize| -> [f64; 2] {
        let c = circle_point(cell, a);
        let (ix, iy) = lattice_of(cell, a);
        let p = lattice_pos(ix, iy);
        let s = layer as f64 / k as f64;
        [c[0] + s * (p[0] - c[0]), c[1] + s * (p[1] - c[1])]
    };

    let mut builder = Builder { positions: Vec::new(), index: HashMap::new() };
    let mut faces: Vec<[usize; 3]> = Vec::new();

    // Annulus vertex on the top or bottom grid of a cell.
    let grid_vertex = |builder: &mut Builder, cell: usize, layer: usize, a: usize, top: bool| {
        let xy = ring_point(cell, layer, a);
        let z = if top { top_z } else { bottom_z };
        let key = if layer == k {
            let (ix, iy) = lattice_of(cell, a);
            if top {
                Key::TopLattice { ix, iy }
            } else {
                Key::BottomLattice { ix, iy }
            }
        } else if top {
            Key::Top { cell, layer, around: a }
        } else {
            Key::Bottom { cell, layer, around: a }
        };
        builder.vertex(key, [xy[0], xy[1], z])
    };

    for cell in 0..g {
        for layer in 0..k {
            for a in 0..m {
                let a1 = (a + 1) % m;
                let p = grid_vertex(&mut builder, cell, layer, a, true);
                let q = grid_vertex(&mut builder, cell, layer + 1, a, true);
                let r = grid_vertex(&mut builder, cell, layer + 1, a1, true);
                let s = grid_vertex(&mut builder, cell, layer, a1, true);
                faces.push([p, q, r]);
                faces.push([p, r, s]);

                let p = grid_vertex(&mut builder, cell, layer, a, false);
                let q = grid_vertex(&mut builder, cell, layer + 1, a, false);
                let r = grid_vertex(&mut builder, cell, layer + 1, a1, false);
                let s = grid_vertex(&mut builder, cell, layer, a1, false);
                faces.push([p, r, q]);
                faces.push([p, s, r]);
            }
        }
    }

    // Hole walls, one polygonal cylinder per cell, traversed so the surface
    // normal points into the hole (away from the solid plate).
    let wall_z = |ring: usize| {
        if ring == 0 {
            top_z
        } else if ring == n_wall {
            bottom_z
        } else {
            top_z - ring as f64 * (thickness / n_wall as f64)
        }
    };
    for cell in 0..g {
        let hole_vertex = |builder: &mut Builder, ring: usize, a: usize| {
            let xy = circle_point(cell, a);
            let key = match ring {
                0 => Key::Top { cell, layer: 0, around: a },
                r if r == n_wall => Key::Bottom { cell, layer: 0, around: a },
                r => Key::HoleWall { cell, ring: r, around: a },
            };
            builder.vertex(key, [xy[0], xy[1], wall_z(ring)])
        };
        for ring in 0..n_wall {
            for a in 0..m {
                let a1 = (a + 1) % m;
                let p = hole_vertex(&mut builder, ring, a);
                let q = hole_vertex(&mut builder, ring, a1);
                let r = hole_vertex(&mut builder, ring + 1, a1);
                let s = hole_vertex(&mut builder, ring + 1, a);
                faces.push([p, q, r]);
                faces.push([p, r, s]);
            }
        }
    }

    // Outer wall. The plate boundary is walked clockwise (seen from +z) so
    // the strip normal points outward, mirroring the hole-wall pattern.
    let mut outer_ccw: Vec<(usize, usize)> = Vec::new();
    for ix in 0..g * k {
        outer_ccw.push((ix, 0));
    }
    for iy in 0..k {
        outer_ccw.push((g * k, iy));
    }
    for ix in (1..=g * k).rev() {
        outer_ccw.push((ix, k));
    }
    for iy in (1..=k).rev() {
        outer_ccw.push((0, iy));
    }
    let ring_len = outer_ccw.len();
    let ring_cw = |s: usize| outer_ccw[(ring_len - s % ring_len) % ring_len];

    let outer_vertex = |builder: &mut Builder, ring: usize, s: usize| {
        let (ix, iy) = ring_cw(s);
        let xy = lattice_pos(ix, iy);
        let key = match ring {
            0 => Key::TopLattice { ix, iy },
            r if r == n_wall => Key::BottomLattice { ix, iy },
            r => Key::OuterWall { ring: r, along: s % ring_len },
        };
        builder.vertex(key, [xy[0], xy[1], wall_z(ring)])
    };
    for ring in 0..n_wall {
        for s in 0..ring_len {
            let p = outer_vertex(&mut builder, ring, s);
            let q = outer_vertex(&mut builder, ring, s + 1);
            let r = outer_vertex(&mut builder, ring + 1, s + 1);
            let t = outer_vertex(&mut builder, ring + 1, s);
            faces.push([p, q, r]);
            faces.push([p, r, t]);
        }
    }

    Ok((builder.positions, faces))
}
