//! Plain-text mesh format.
//!
//! Line-oriented ASCII; lines starting with `#` are ignored:
//! ```text
//! nv nt nb
//! x y          (nv lines)
//! v0 v1 v2     (nt lines, 0-based, counter-clockwise)
//! v0 v1 marker (nb lines)
//! ```

use super::{Mesh, MeshError};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    out.push_str(&format!(
        "{} {} {}\n",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_edges().len()
    ));
    for &(x, y) in mesh.vertices() {
        out.push_str(&format!("{:.17e} {:.17e}\n", x, y));
    }
    for &[a, b, c] in mesh.triangles() {
        out.push_str(&format!("{a} {b} {c}\n"));
    }
    for &(a, b, m) in mesh.boundary_edges() {
        out.push_str(&format!("{a} {b} {m}\n"));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    // (line number, content) pairs with comments and blanks skipped
    let mut lines: Vec<(usize, String)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((i + 1, trimmed.to_string()));
    }
    let mut cursor = lines.into_iter();
    let (header_line, header) = cursor.next().ok_or(MeshError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| MeshError::Parse {
                line: header_line,
                message: format!("bad count '{tok}'"),
            })
        })
        .collect::<Result<_, _>>()?;
    if counts.len() != 3 {
        return Err(MeshError::Parse {
            line: header_line,
            message: "header must be `nv nt nb`".into(),
        });
    }
    let (nv, nt, nb) = (counts[0], counts[1], counts[2]);

    let mut next = |expect: &str| -> Result<(usize, String), MeshError> {
        cursor.next().ok_or(MeshError::Parse {
            line: 0,
            message: format!("unexpected end of file while reading {expect}"),
        })
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, s) = next("vertices")?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(MeshError::Parse {
                line: ln,
                message: "vertex line must be `x y`".into(),
            });
        }
        let x: f64 = toks[0].parse().map_err(|_| MeshError::Parse {
            line: ln,
            message: format!("bad coordinate '{}'", toks[0]),
        })?;
        let y: f64 = toks[1].parse().map_err(|_| MeshError::Parse {
            line: ln,
            message: format!("bad coordinate '{}'", toks[1]),
        })?;
        vertices.push((x, y));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, s) = next("triangles")?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(MeshError::Parse {
                line: ln,
                message: "triangle line must be `v0 v1 v2`".into(),
            });
        }
        let mut t = [0usize; 3];
        for (k, tok) in toks.iter().enumerate() {
            t[k] = tok.parse().map_err(|_| MeshError::Parse {
                line: ln,
                message: format!("bad vertex index '{tok}'"),
            })?;
        }
        triangles.push(t);
    }
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, s) = next("boundary edges")?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(MeshError::Parse {
                line: ln,
                message: "boundary line must be `v0 v1 marker`".into(),
            });
        }
        let a: usize = toks[0].parse().map_err(|_| MeshError::Parse {
            line: ln,
            message: format!("bad vertex index '{}'", toks[0]),
        })?;
        let b: usize = toks[1].parse().map_err(|_| MeshError::Parse {
            line: ln,
            message: format!("bad vertex index '{}'", toks[1]),
        })?;
        let m: u32 = toks[2].parse().map_err(|_| MeshError::Parse {
            line: ln,
            message: format!("bad marker '{}'", toks[2]),
        })?;
        boundary_edges.push((a, b, m));
    }
    Mesh::new(vertices, triangles, boundary_edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square;

    #[test]
    fn round_trip_identity() {
        let m = build_unit_square(2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("square.mesh");
        write_mesh(&m, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(m.vertices(), back.vertices());
        assert_eq!(m.triangles(), back.triangles());
        assert_eq!(m.boundary_edges(), back.boundary_edges());
    }

    #[test]
    fn negative_area_names_triangle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mesh");
        std::fs::write(
            &path,
            "# flipped triangle\n3 1 3\n0 0\n1 0\n0 1\n0 2 1\n0 2 1\n2 1 1\n1 0 1\n",
        )
        .unwrap();
        match read_mesh(&path) {
            Err(MeshError::Orientation { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected orientation error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_index_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dangle.mesh");
        std::fs::write(&path, "3 1 3\n0 0\n1 0\n0 1\n0 1 7\n0 1 1\n1 2 1\n2 0 1\n").unwrap();
        match read_mesh(&path) {
            Err(MeshError::DanglingIndex { index, .. }) => assert_eq!(index, 7),
            other => panic!("expected dangling index error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("malformed.mesh");
        std::fs::write(&path, "# header\n3 1 3\n0 0\n1 zzz\n0 1\n0 1 2\n0 1 1\n1 2 1\n2 0 1\n")
            .unwrap();
        match read_mesh(&path) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
