//! Closed oriented triangle meshes: construction-time validation, genus
//! bookkeeping, OBJ input/output, a genus-g test surface generator, and
//! midpoint refinement.

mod generate;
mod obj;
mod rounded;

pub use generate::generate_genus_g;
pub use obj::{load_obj, load_obj_with_scalar, save_obj, save_obj_with_scalar};
pub use rounded::{generate_genus_g_rounded, RoundedPlateSurface};

use std::collections::HashMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("mesh has no {0}")]
    Empty(&'static str),
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteCoordinate { vertex: usize },
    #[error("face {face} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange { face: usize, index: usize, vertex_count: usize },
    #[error("face {face} repeats a vertex index")]
    RepeatedVertex { face: usize },
    #[error("faces {first} and {second} share the same vertex set")]
    DuplicateFace { first: usize, second: usize },
    #[error("face {face} has zero area")]
    ZeroAreaFace { face: usize },
    #[error("edge ({a}, {b}) lies on only one face: the surface has a boundary")]
    BoundaryEdge { a: usize, b: usize },
    #[error("edge ({a}, {b}) lies on {count} faces: the surface is not edge-manifold")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("edge ({a}, {b}) is traversed twice in the same direction: face windings are inconsistent")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("vertex {vertex} is not referenced by any face")]
    IsolatedVertex { vertex: usize },
    #[error("Euler characteristic {chi} is odd: not a closed orientable surface")]
    OddEulerCharacteristic { chi: i64 },
    #[error("Euler characteristic {chi} exceeds 2: genus would be negative")]
    NegativeGenus { chi: i64 },
    #[error("invalid {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
}

/// A closed, consistently oriented triangle mesh embedded in 3-space.
///
/// Every value of this type has passed full validation: each edge lies on
/// exactly two faces traversing it in opposite directions, no face is
/// degenerate or duplicated, no vertex is isolated, and the Euler
/// characteristic V - E + F is even.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
}

impl TriangleMesh {
    /// Validates and builds a mesh. Face windings define the orientation;
    /// no repair of any kind is attempted, since silently flipping faces
    /// could corrupt curvature signs downstream.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<TriangleMesh, MeshError> {
        if vertices.is_empty() {
            return Err(MeshError::Empty("vertices"));
        }
        if faces.is_empty() {
            return Err(MeshError::Empty("faces"));
        }
        for (i, p) in vertices.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(MeshError::NonFiniteCoordinate { vertex: i });
            }
        }

        let v = vertices.len();
        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(faces.len());
        let mut referenced = vec![false; v];
        for (f, tri) in faces.iter().enumerate() {
            for &idx in tri {
                if idx >= v {
                    return Err(MeshError::IndexOutOfRange { face: f, index: idx, vertex_count: v });
                }
            }
            let [a, b, c] = *tri;
            if a == b || b == c || a == c {
                return Err(MeshError::RepeatedVertex { face: f });
            }
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateFace { first, second: f });
            }
            seen.insert(key, f);
            for &idx in tri {
                referenced[idx] = true;
            }
            if face_area(&vertices, *tri) == 0.0 {
                return Err(MeshError::ZeroAreaFace { face: f });
            }
        }
        if let Some(vertex) = referenced.iter().position(|&r| !r) {
            return Err(MeshError::IsolatedVertex { vertex });
        }

        // Each undirected edge must be traversed exactly once in each
        // direction across the faces containing it.
        let mut incidence: HashMap<[usize; 2], (usize, usize)> = HashMap::new();
        for tri in &faces {
            let [a, b, c] = *tri;
            for (from, to) in [(a, b), (b, c), (c, a)] {
                let key = if from < to { [from, to] } else { [to, from] };
                let entry = incidence.entry(key).or_insert((0, 0));
                if from < to {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        let mut edge_records: Vec<([usize; 2], (usize, usize))> = incidence.into_iter().collect();
        edge_records.sort_unstable();
        for &([a, b], (forward, backward)) in &edge_records {
            let count = forward + backward;
            if count == 1 {
                return Err(MeshError::BoundaryEdge { a, b });
            }
            if count > 2 {
                return Err(MeshError::NonManifoldEdge { a, b, count });
            }
            if forward != 1 {
                return Err(MeshError::InconsistentOrientation { a, b });
            }
        }

        let edges: Vec<[usize; 2]> = edge_records.into_iter().map(|(e, _)| e).collect();

        let chi = v as i64 - edges.len() as i64 + faces.len() as i64;
        if chi.rem_euclid(2) != 0 {
            return Err(MeshError::OddEulerCharacteristic { chi });
        }

        Ok(TriangleMesh { vertices, faces, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Undirected edges as index pairs with `a < b`, lexicographically sorted.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Genus from chi = 2 - 2g. Fails on chi > 2, which a connected closed
    /// orientable surface cannot have (it arises from multi-component input).
    pub fn genus(&self) -> Result<usize, MeshError> {
        let chi = self.euler_characteristic();
        if chi > 2 {
            return Err(MeshError::NegativeGenus { chi });
        }
        Ok(((2 - chi) / 2) as usize)
    }

    /// Whether the vertex adjacency graph has a single component.
    pub fn is_connected(&self) -> bool {
        let v = self.vertex_count();
        let mut adjacency = vec![Vec::new(); v];
        for &[a, b] in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut visited = vec![false; v];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut count = 0;
        while let Some(x) = stack.pop() {
            count += 1;
            for &y in &adjacency[x] {
                if !visited[y] {
                    visited[y] = true;
                    stack.push(y);
                }
            }
        }
        count == v
    }

    /// One-to-four midpoint subdivision. Each edge gains its midpoint; each
    /// face splits into three corner triangles and one central triangle, all
    /// inheriting the parent winding. V' = V + E, F' = 4F, and the Euler
    /// characteristic is preserved.
    pub fn refine(&self) -> TriangleMesh {
        let v = self.vertex_count();
        let mut vertices = self.vertices.clone();
        vertices.reserve(self.edge_count());
        let mut midpoint: HashMap<[usize; 2], usize> = HashMap::with_capacity(self.edge_count());
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let pa = self.vertices[a];
            let pb = self.vertices[b];
            vertices.push([
                0.5 * (pa[0] + pb[0]),
                0.5 * (pa[1] + pb[1]),
                0.5 * (pa[2] + pb[2]),
            ]);
            midpoint.insert([a, b], v + e);
        }
        let mid = |a: usize, b: usize| {
            let key = if a < b { [a, b] } else { [b, a] };
            midpoint[&key]
        };

        let mut faces = Vec::with_capacity(4 * self.face_count());
        for &[a, b, c] in &self.faces {
            let ab = mid(a, b);
            let bc = mid(b, c);
            let ca = mid(c, a);
            faces.push([a, ab, ca]);
            faces.push([ab, b, bc]);
            faces.push([ca, bc, c]);
            faces.push([ab, bc, ca]);
        }

        TriangleMesh::new(vertices, faces)
            .expect("midpoint subdivision of a valid mesh is valid")
    }

    /// Carries a vertex field through one [`refine`](Self::refine) step:
    /// original vertices keep their values and each edge midpoint gets the
    /// average of its endpoints. Useful for warm-starting solves on a
    /// refined mesh from a coarse solution.
    pub fn prolong_refined(&self, field: &[f64]) -> Vec<f64> {
        assert_eq!(field.len(), self.vertex_count(), "field length must match vertex count");
        let mut out = Vec::with_capacity(self.vertex_count() + self.edge_count());
        out.extend_from_slice(field);
        for &[a, b] in &self.edges {
            out.push(0.5 * (field[a] + field[b]));
        }
        out
    }
}

pub(crate) fn face_area(vertices: &[[f64; 3]], [a, b, c]: [usize; 3]) -> f64 {
    let u = sub(vertices[b], vertices[a]);
    let w = sub(vertices[c], vertices[a]);
    0.5 * norm(cross(u, w))
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Vertices and faces of a regular tetrahedron; the smallest closed mesh,
/// used widely in tests.
pub fn tetrahedron() -> TriangleMesh {
    let s = 1.0 / 3.0_f64.sqrt();
    let vertices = vec![
        [s, s, s],
        [s, -s, -s],
        [-s, s, -s],
        [-s, -s, s],
    ];
    let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    TriangleMesh::new(vertices, faces).expect("tetrahedron is valid")
}
