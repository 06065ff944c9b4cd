//! ASCII mesh format.
//!
//! ```text
//! # comment
//! nVerts nTets nBoundaryFacets
//! x y z [ownerGid localGid]     (nVerts lines)
//! v0 v1 v2 v3                   (nTets lines)
//! v0 v1 v2 tag                  (nBoundaryFacets lines)
//! ```
//!
//! Gid columns are optional on input; when absent every vertex gets
//! `(0, line index)`. Boundary vertex flags are derived from the facets.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryFacet, GlobalId, MeshError, TetMesh, Tetrahedron, Vertex, VERT_BOUNDARY};

pub fn read_mesh(path: &Path) -> Result<TetMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    read_mesh_str(&text)
}

pub fn read_mesh_str(text: &str) -> Result<TetMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines
        .next()
        .ok_or(MeshError::Parse { line: 0, msg: "empty file".into() })?;
    let counts: Vec<usize> = parse_tokens(header, line)?;
    if counts.len() != 3 {
        return Err(MeshError::Parse {
            line,
            msg: format!("expected `nVerts nTets nBoundaryFacets`, got {header:?}"),
        });
    }
    let (nv, nt, nf) = (counts[0], counts[1], counts[2]);

    let mut mesh = TetMesh::new();
    for i in 0..nv {
        let (line, l) = next_line(&mut lines, "vertex")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 && toks.len() != 5 {
            return Err(MeshError::Parse {
                line,
                msg: format!("vertex line needs 3 or 5 fields, got {}", toks.len()),
            });
        }
        let mut pos = [0.0; 3];
        for (k, t) in toks[..3].iter().enumerate() {
            pos[k] = t.parse().map_err(|e| MeshError::Parse {
                line,
                msg: format!("bad coordinate {t:?}: {e}"),
            })?;
        }
        let gid = if toks.len() == 5 {
            GlobalId::new(
                parse_one(toks[3], line)?,
                parse_one(toks[4], line)?,
            )
        } else {
            GlobalId::new(0, i as u64)
        };
        mesh.vertices.push(Vertex::new(pos, gid));
    }
    for _ in 0..nt {
        let (line, l) = next_line(&mut lines, "tet")?;
        let v: Vec<u32> = parse_tokens(l, line)?;
        if v.len() != 4 {
            return Err(MeshError::Parse {
                line,
                msg: format!("tet line needs 4 fields, got {}", v.len()),
            });
        }
        mesh.tets.push(Tetrahedron::new([v[0], v[1], v[2], v[3]]));
    }
    for _ in 0..nf {
        let (line, l) = next_line(&mut lines, "facet")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(MeshError::Parse {
                line,
                msg: format!("facet line needs 4 fields, got {}", toks.len()),
            });
        }
        let verts = [
            parse_one(toks[0], line)?,
            parse_one(toks[1], line)?,
            parse_one(toks[2], line)?,
        ];
        let tag: i64 = toks[3].parse().map_err(|e| MeshError::Parse {
            line,
            msg: format!("bad tag {:?}: {e}", toks[3]),
        })?;
        mesh.boundary_facets.push(BoundaryFacet::new(verts, tag));
    }
    mesh.validate_indices()?;
    for f in &mesh.boundary_facets {
        for v in f.verts {
            mesh.vertices[v as usize].flags |= VERT_BOUNDARY;
        }
    }
    Ok(mesh)
}

pub fn write_mesh(path: &Path, mesh: &TetMesh) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn write_mesh_string(mesh: &TetMesh) -> String {
    let mut mesh = mesh.clone();
    mesh.compact();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.vertices.len(),
        mesh.tets.len(),
        mesh.boundary_facets.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(
            out,
            "{:?} {:?} {:?} {} {}",
            v.position[0], v.position[1], v.position[2], v.gid.owner, v.gid.local
        );
    }
    for t in &mesh.tets {
        let _ = writeln!(out, "{} {} {} {}", t.verts[0], t.verts[1], t.verts[2], t.verts[3]);
    }
    for f in &mesh.boundary_facets {
        let _ = writeln!(out, "{} {} {} {}", f.verts[0], f.verts[1], f.verts[2], f.tag);
    }
    out
}

fn next_line<'a, I: Iterator<Item = (usize, &'a str)>>(
    lines: &mut I,
    what: &str,
) -> Result<(usize, &'a str), MeshError> {
    lines.next().ok_or(MeshError::Parse {
        line: 0,
        msg: format!("unexpected end of file reading {what} records"),
    })
}

fn parse_tokens<T: std::str::FromStr>(l: &str, line: usize) -> Result<Vec<T>, MeshError>
where
    T::Err: std::fmt::Display,
{
    l.split_whitespace()
        .map(|t| {
            t.parse().map_err(|e| MeshError::Parse {
                line,
                msg: format!("bad token {t:?}: {e}"),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(t: &str, line: usize) -> Result<T, MeshError>
where
    T::Err: std::fmt::Display,
{
    t.parse().map_err(|e| MeshError::Parse {
        line,
        msg: format!("bad token {t:?}: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::sample;

    #[test]
    fn round_trip_box() {
        let mesh = sample::box_mesh(2, 1, 1);
        let text = write_mesh_string(&mesh);
        let back = read_mesh_str(&text).unwrap();
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        assert_eq!(back.tets.len(), mesh.tets.len());
        assert_eq!(back.boundary_facets.len(), mesh.boundary_facets.len());
        for (a, b) in mesh.vertices.iter().zip(back.vertices.iter()) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.gid, b.gid);
            assert_eq!(a.is_boundary(), b.is_boundary());
        }
        // Exact coordinate round trip via {:?} float formatting.
        let again = write_mesh_string(&back);
        assert_eq!(text, again);
    }

    #[test]
    fn comments_and_missing_gids() {
        let text = "# a cube? no, a tet\n4 1 0\n0 0 0\n1 0 0  # inline\n0 1 0\n0 0 1\n0 1 2 3\n";
        let mesh = read_mesh_str(text).unwrap();
        assert_eq!(mesh.vertices[3].gid, GlobalId::new(0, 3));
        assert_eq!(mesh.tets.len(), 1);
    }

    #[test]
    fn truncated_file_rejected() {
        let text = "4 1 0\n0 0 0\n1 0 0\n";
        assert!(matches!(read_mesh_str(text), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let text = "4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 9\n";
        assert!(matches!(
            read_mesh_str(text),
            Err(MeshError::IndexOutOfRange(9, 4))
        ));
    }
}
