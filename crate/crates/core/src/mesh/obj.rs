//! Wavefront OBJ subset: `v x y z` positions, `f i j k` triangles with
//! 1-based indices, `#` comments. An optional per-vertex scalar field rides
//! along as `# vs <index> <value>` comment lines (1-based, one per vertex),
//! so annotated files remain valid OBJ for any other reader. Floats are
//! written with 17 significant digits, which round-trips f64 exactly.

use super::{MeshError, TriangleMesh};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let (mesh, _) = load_obj_with_scalar(path)?;
    Ok(mesh)
}

/// Loads a mesh along with its `# vs` scalar field, if one is present.
/// A file with no `# vs` lines yields `None`; a partial field is an error.
pub fn load_obj_with_scalar(
    path: impl AsRef<Path>,
) -> Result<(TriangleMesh, Option<Vec<f64>>), MeshError> {
    let path = path.as_ref();
    let io_err = |source| MeshError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let reader = BufReader::new(file);

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut scalars: Vec<(usize, f64, usize)> = Vec::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| MeshError::Io { path: path.to_path_buf(), source })?;
        let line_no = line_no + 1;
        let parse_err = |message: String| MeshError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };

        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut tokens = comment.split_whitespace();
            if tokens.next() == Some("vs") {
                let index: usize = tokens
                    .next()
                    .ok_or_else(|| parse_err("vs record is missing its index".into()))?
                    .parse()
                    .map_err(|_| parse_err("vs record has a non-integer index".into()))?;
                let value: f64 = tokens
                    .next()
                    .ok_or_else(|| parse_err("vs record is missing its value".into()))?
                    .parse()
                    .map_err(|_| parse_err("vs record has a non-numeric value".into()))?;
                if tokens.next().is_some() {
                    return Err(parse_err("vs record has trailing tokens".into()));
                }
                scalars.push((index, value, line_no));
            }
            continue;
        }

        let mut tokens = trimmed.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for coord in &mut coords {
                    *coord = tokens
                        .next()
                        .ok_or_else(|| parse_err("v record needs three coordinates".into()))?
                        .parse()
                        .map_err(|_| parse_err("v record has a non-numeric coordinate".into()))?;
                }
                if tokens.next().is_some() {
                    return Err(parse_err("v record has more than three coordinates".into()));
                }
                vertices.push(coords);
            }
            Some("f") => {
                let mut indices = [0usize; 3];
                for slot in &mut indices {
                    let token = tokens.next().ok_or_else(|| {
                        parse_err(format!("face {} is not a triangle", faces.len()))
                    })?;
                    if token.contains('/') {
                        return Err(parse_err(
                            "texture/normal face records are not supported; use plain `f i j k`"
                                .into(),
                        ));
                    }
                    let one_based: usize = token.parse().map_err(|_| {
                        parse_err(format!("face {} has a non-integer index", faces.len()))
                    })?;
                    if one_based == 0 || one_based > vertices.len() {
                        return Err(parse_err(format!(
                            "face {} references vertex {} of {}",
                            faces.len(),
                            one_based,
                            vertices.len()
                        )));
                    }
                    *slot = one_based - 1;
                }
                if tokens.next().is_some() {
                    return Err(parse_err(format!("face {} is not a triangle", faces.len())));
                }
                faces.push(indices);
            }
            Some(other) => {
                return Err(parse_err(format!(
                    "unsupported record `{other}` (this reader accepts only v, f, and comments)"
                )));
            }
            None => unreachable!("trimmed line is nonempty"),
        }
    }

    let vertex_count = vertices.len();
    let mesh = TriangleMesh::new(vertices, faces)?;

    if scalars.is_empty() {
        return Ok((mesh, None));
    }
    let mut field = vec![None; vertex_count];
    for (index, value, line_no) in scalars {
        let parse_err = |message: String| MeshError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        if index == 0 || index > vertex_count {
            return Err(parse_err(format!(
                "vs record references vertex {index} of {vertex_count}"
            )));
        }
        if field[index - 1].replace(value).is_some() {
            return Err(parse_err(format!("vs record repeats vertex {index}")));
        }
    }
    if let Some(missing) = field.iter().position(|s| s.is_none()) {
        return Err(MeshError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!(
                "scalar field is incomplete: vertex {} has no vs record",
                missing + 1
            ),
        });
    }
    let field = field.into_iter().map(|s| s.unwrap()).collect();
    Ok((mesh, Some(field)))
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    write_obj(mesh, None, path.as_ref())
}

/// Saves a mesh with a per-vertex scalar field as `# vs` records.
pub fn save_obj_with_scalar(
    mesh: &TriangleMesh,
    scalar: &[f64],
    path: impl AsRef<Path>,
) -> Result<(), MeshError> {
    if scalar.len() != mesh.vertex_count() {
        return Err(MeshError::InvalidParameter {
            name: "scalar",
            message: format!(
                "field has length {}, mesh has {} vertices",
                scalar.len(),
                mesh.vertex_count()
            ),
        });
    }
    write_obj(mesh, Some(scalar), path.as_ref())
}

fn write_obj(mesh: &TriangleMesh, scalar: Option<&[f64]>, path: &Path) -> Result<(), MeshError> {
    let io_err = |source| MeshError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for p in mesh.vertices() {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
        }
        if let Some(field) = scalar {
            for (i, value) in field.iter().enumerate() {
                writeln!(out, "# vs {} {:.16e}", i + 1, value)?;
            }
        }
        for f in mesh.faces() {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        out.flush()
    };
    write().map_err(io_err)
}
