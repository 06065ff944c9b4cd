//! Built-in sample meshes for tests, benchmarks and the Python bindings.

use super::{face_multiplicities, BoundaryFacet, GlobalId, TetMesh, Tetrahedron, Vertex, VERT_BOUNDARY};

/// The reference tet (0,0,0) (1,0,0) (0,1,0) (0,0,1).
pub fn single_tet() -> TetMesh {
    let positions = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];
    let mut mesh = TetMesh::new();
    for (i, p) in positions.iter().enumerate() {
        mesh.vertices.push(Vertex::new(*p, GlobalId::new(0, i as u64)));
    }
    mesh.tets.push(Tetrahedron::new([0, 1, 2, 3]));
    tag_boundary(&mut mesh);
    mesh
}

/// Regular tetrahedron with unit edge length.
pub fn regular_tet() -> TetMesh {
    let s3 = 3.0f64.sqrt();
    let s6 = 6.0f64.sqrt();
    let positions = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.5, s3 / 2.0, 0.0],
        [0.5, s3 / 6.0, s6 / 3.0],
    ];
    let mut mesh = TetMesh::new();
    for (i, p) in positions.iter().enumerate() {
        mesh.vertices.push(Vertex::new(*p, GlobalId::new(0, i as u64)));
    }
    mesh.tets.push(Tetrahedron::new([0, 1, 2, 3]));
    tag_boundary(&mut mesh);
    mesh
}

/// Two positively oriented tets sharing the face (0,1,2).
pub fn two_tets() -> TetMesh {
    let positions = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.3, 0.3, 1.0],
        [0.3, 0.3, -1.0],
    ];
    let mut mesh = TetMesh::new();
    for (i, p) in positions.iter().enumerate() {
        mesh.vertices.push(Vertex::new(*p, GlobalId::new(0, i as u64)));
    }
    mesh.tets.push(Tetrahedron::new([0, 1, 2, 3]));
    mesh.tets.push(Tetrahedron::new([1, 0, 2, 4]));
    tag_boundary(&mut mesh);
    mesh
}

/// Unit cube `[0,1]^3` split into `nx*ny*nz` cells of 6 tets each (Kuhn
/// subdivision along the main diagonal, conforming across cells).
pub fn box_mesh(nx: usize, ny: usize, nz: usize) -> TetMesh {
    scaled_box_mesh(nx, ny, nz, [1.0, 1.0, 1.0])
}

/// Box `[0,ex]x[0,ey]x[0,ez]` with the same subdivision as [`box_mesh`].
pub fn scaled_box_mesh(nx: usize, ny: usize, nz: usize, extent: [f64; 3]) -> TetMesh {
    assert!(nx > 0 && ny > 0 && nz > 0);
    let mut mesh = TetMesh::new();
    let vid = |i: usize, j: usize, k: usize| (i + (nx + 1) * (j + (ny + 1) * k)) as u32;
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let p = [
                    extent[0] * i as f64 / nx as f64,
                    extent[1] * j as f64 / ny as f64,
                    extent[2] * k as f64 / nz as f64,
                ];
                let local = mesh.vertices.len() as u64;
                mesh.vertices.push(Vertex::new(p, GlobalId::new(0, local)));
            }
        }
    }
    // Six permutations of the axis order; odd ones need a swap to stay
    // positively oriented.
    const PERMS: [([usize; 3], bool); 6] = [
        ([0, 1, 2], true),
        ([1, 2, 0], true),
        ([2, 0, 1], true),
        ([0, 2, 1], false),
        ([2, 1, 0], false),
        ([1, 0, 2], false),
    ];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = [i, j, k];
                for (perm, even) in PERMS {
                    let mut c = corner;
                    let v0 = vid(c[0], c[1], c[2]);
                    c[perm[0]] += 1;
                    let v1 = vid(c[0], c[1], c[2]);
                    c[perm[1]] += 1;
                    let v2 = vid(c[0], c[1], c[2]);
                    c[perm[2]] += 1;
                    let v3 = vid(c[0], c[1], c[2]);
                    let t = if even {
                        Tetrahedron::new([v0, v1, v2, v3])
                    } else {
                        Tetrahedron::new([v0, v1, v3, v2])
                    };
                    mesh.tets.push(t);
                }
            }
        }
    }
    tag_boundary(&mut mesh);
    mesh
}

/// Derive boundary facets (every face with multiplicity 1) and set vertex
/// boundary flags. Tags identify the closest axis-aligned plane when the
/// facet is planar, else 0.
pub fn tag_boundary(mesh: &mut TetMesh) {
    mesh.boundary_facets.clear();
    let faces = face_multiplicities(mesh);
    let mut facets: Vec<([u32; 3], [u32; 3])> = Vec::new();
    for (key, owners) in faces {
        if let [(t, k)] = owners.as_slice() {
            let f = mesh.tets[*t as usize].faces()[*k as usize];
            facets.push((key, f));
        }
    }
    facets.sort_unstable_by_key(|(key, _)| *key);
    for (_, f) in facets {
        let tag = facet_plane_tag(mesh, f);
        mesh.boundary_facets.push(BoundaryFacet::new(f, tag));
        for v in f {
            mesh.vertices[v as usize].flags |= VERT_BOUNDARY;
        }
    }
}

fn facet_plane_tag(mesh: &TetMesh, f: [u32; 3]) -> i64 {
    for axis in 0..3 {
        let c0 = mesh.position(f[0])[axis];
        if mesh
            .position(f[1])[axis]
            .max(mesh.position(f[2])[axis])
            .max(c0)
            - mesh
                .position(f[1])[axis]
                .min(mesh.position(f[2])[axis])
                .min(c0)
            < 1e-12
        {
            return (axis as i64) * 2 + if c0.abs() < 1e-12 { 1 } else { 2 };
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::check_simple_connectivity;

    #[test]
    fn box_meshes_are_conforming_and_positive() {
        for (nx, ny, nz) in [(1, 1, 1), (2, 2, 2), (3, 2, 1)] {
            let mesh = box_mesh(nx, ny, nz);
            assert_eq!(mesh.tets.len(), 6 * nx * ny * nz);
            for (i, _) in mesh.live_tets() {
                assert!(mesh.tet_volume(i) > 0.0, "tet {i} inverted");
            }
            let vol = mesh.total_volume();
            assert!((vol - 1.0).abs() < 1e-12, "volume {vol}");
            let report = check_simple_connectivity(&mesh).unwrap();
            assert!(report.connected);
        }
    }

    #[test]
    fn box_boundary_facets_cover_surface() {
        let mesh = box_mesh(2, 2, 2);
        // Each side has 2*n^2 triangles.
        assert_eq!(mesh.boundary_facets.len(), 6 * 2 * 4);
        assert!(mesh.boundary_facets.iter().all(|f| f.tag >= 1 && f.tag <= 6));
    }

    #[test]
    fn regular_tet_has_unit_edges() {
        let mesh = regular_tet();
        for (a, b) in mesh.tets[0].edges() {
            let d = crate::mesh::geometry::sub(mesh.position(a), mesh.position(b));
            assert!((crate::mesh::geometry::norm(d) - 1.0).abs() < 1e-12);
        }
        assert!(mesh.tet_volume(0) > 0.0);
    }
}
