use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Point3;

use super::{ply, ply::write_atomic, IngestError};

fn mesh_err(path: &Path, message: impl Into<String>) -> IngestError {
    IngestError::MeshLoad { path: path.to_path_buf(), message: message.into() }
}

/// Loads an OBJ or PLY polygon mesh as a triangle soup (polygons are fan
/// triangulated). Texture/normal references in OBJ faces are ignored.
pub fn load_mesh(path: &Path) -> Result<(Vec<Point3<f64>>, Vec<[u32; 3]>), IngestError> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let (vertices, triangles) = match ext.as_deref() {
        Some("obj") => load_obj(path)?,
        Some("ply") => ply::load_ply_mesh(path).map_err(|e| match e {
            IngestError::MissingFile { .. } => e,
            other => mesh_err(path, other.to_string()),
        })?,
        _ => return Err(mesh_err(path, "expected a .obj or .ply mesh")),
    };
    if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i as usize >= vertices.len())) {
        return Err(mesh_err(path, format!("face {t:?} indexes past {} vertices", vertices.len())));
    }
    Ok((vertices, triangles))
}

fn load_obj(path: &Path) -> Result<(Vec<Point3<f64>>, Vec<[u32; 3]>), IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile { path: path.to_path_buf() });
    }
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok.take(3).map(str::parse).collect::<Result<_, _>>()
                    .map_err(|_| mesh_err(path, format!("line {}: bad vertex", ln + 1)))?;
                if c.len() != 3 {
                    return Err(mesh_err(path, format!("line {}: vertex needs 3 coordinates", ln + 1)));
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let n = vertices.len() as i64;
                let idx: Vec<u32> = tok
                    .map(|t| {
                        let i: i64 = t.split('/').next().unwrap_or("").parse().ok()?;
                        let i = if i < 0 { n + i } else { i - 1 };
                        (0..n).contains(&i).then_some(i as u32)
                    })
                    .collect::<Option<_>>()
                    .ok_or_else(|| mesh_err(path, format!("line {}: bad face index", ln + 1)))?;
                if idx.len() < 3 {
                    return Err(mesh_err(path, format!("line {}: face needs 3 vertices", ln + 1)));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

pub fn save_obj(vertices: &[Point3<f64>], triangles: &[[u32; 3]], path: &Path) -> Result<(), IngestError> {
    let mut s = String::new();
    for v in vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.5, 0.0, 0.0), Point3::new(0.0, 0.25, 2.0)];
        let f = vec![[0, 1, 2]];
        let p = dir.path().join("m.obj");
        save_obj(&v, &f, &p).unwrap();
        assert_eq!(load_mesh(&p).unwrap(), (v, f));
    }

    #[test]
    fn obj_quads_slashes_and_negative_indices() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 -1//1\n").unwrap();
        let (_, f) = load_mesh(&p).unwrap();
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.obj");
        fs::write(&p, "v 0 0 0\nf 1 2 3\n").unwrap();
        assert!(matches!(load_mesh(&p), Err(IngestError::MeshLoad { .. })));
        assert!(matches!(load_mesh(&dir.path().join("x.stl")), Err(IngestError::MeshLoad { .. })));
        assert!(matches!(load_mesh(&dir.path().join("x.obj")), Err(IngestError::MissingFile { .. })));
    }
}
