//! OFF and OBJ triangle mesh I/O. Polygons other than triangles are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

/// Reads `.off` or `.obj` by extension.
pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("off") => parse_off(&text),
        Some("obj") => parse_obj(&text),
        _ => Err(Error::Parse(format!(
            "unknown mesh extension for {}",
            path.display()
        ))),
    }
}

pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace());
    let header = tokens
        .next()
        .ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    if header != "OFF" {
        return Err(Error::Parse(format!("expected OFF header, got {header:?}")));
    }
    let mut next_num = |what: &str| -> Result<f64> {
        let t = tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of file reading {what}")))?;
        t.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number {t:?} in {what}")))
    };
    let nv = next_num("vertex count")? as usize;
    let nf = next_num("face count")? as usize;
    let _ne = next_num("edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Vec3::new(
            next_num("vertex")?,
            next_num("vertex")?,
            next_num("vertex")?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for fi in 0..nf {
        let k = next_num("face arity")? as usize;
        if k != 3 {
            return Err(Error::Parse(format!(
                "face {fi} has {k} vertices; only triangles are supported"
            )));
        }
        faces.push([
            next_num("face")? as usize,
            next_num("face")? as usize,
            next_num("face")? as usize,
        ]);
    }
    TriMesh::new(vertices, faces)
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("bad vertex on line {}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(Error::Parse(format!("short vertex on line {}", lineno + 1)));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| {
                            Error::Parse(format!("bad face index {t:?} on line {}", lineno + 1))
                        })?;
                        let resolved = if i < 0 {
                            vertices.len() as i64 + i
                        } else {
                            i - 1
                        };
                        usize::try_from(resolved).map_err(|_| {
                            Error::Parse(format!(
                                "face index {i} out of range on line {}",
                                lineno + 1
                            ))
                        })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::Parse(format!(
                        "face on line {} has {} vertices; only triangles are supported",
                        lineno + 1,
                        idx.len()
                    )));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// OFF text with vertex coordinates printed in shortest round-trip form.
pub fn to_off(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.n_vertices() * 48 + mesh.n_faces() * 24);
    let _ = writeln!(s, "OFF");
    let _ = writeln!(
        s,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_faces(),
        mesh.n_edges()
    );
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_off(mesh: &TriMesh, path: &Path) -> Result<()> {
    fs::write(path, to_off(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA_OFF: &str =
        "OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn off_round_trip_is_exact() {
        let m = parse_off(TETRA_OFF).unwrap();
        let again = parse_off(&to_off(&m)).unwrap();
        assert_eq!(m.vertices(), again.vertices());
        assert_eq!(m.faces(), again.faces());
    }

    #[test]
    fn quads_are_rejected() {
        let quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(parse_off(quad), Err(Error::Parse(_))));
        let obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(parse_obj(obj), Err(Error::Parse(_))));
    }

    #[test]
    fn obj_with_texture_indices() {
        let obj = "# tetra\nv 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\nvt 0 0\n\
                   f 1/1 2/1 3/1\nf 1/1 4/1 2/1\nf 1 3 4\nf -3 -1 -2\n";
        let m = parse_obj(obj).unwrap();
        assert_eq!(m.n_faces(), 4);
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn truncated_off_is_an_error() {
        assert!(matches!(
            parse_off("OFF\n4 4 6\n1 1 1\n"),
            Err(Error::Parse(_))
        ));
    }
}
