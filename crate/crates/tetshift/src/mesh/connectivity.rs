//! Simple-connectivity diagnostics.
//!
//! A tet set is simply connected when its face-adjacency graph has one
//! component and no two parts of it meet only at a vertex or an edge. The
//! latter is equivalent to every vertex star and every edge star being
//! face-connected.

use std::collections::HashMap;

use super::adjacency::build_adjacency;
use super::{MeshError, TetMesh};

#[derive(Debug, Clone, Default)]
pub struct ConnectivityReport {
    pub connected: bool,
    /// Number of face-connected components among live tets.
    pub component_count: usize,
    /// Component label per tet slot (dead tets get u32::MAX).
    pub component_of: Vec<u32>,
    /// Vertices whose star splits into >1 face-connected group.
    pub pinch_vertices: Vec<u32>,
    /// Edges whose star splits into >1 face-connected group.
    pub pinch_edges: Vec<(u32, u32)>,
}

/// Label face-connected components among a subset of tets. `members` maps a
/// tet id to its dense index; adjacency is restricted to the subset.
fn label_components(
    members: &[u32],
    adjacency: impl Fn(u32) -> Vec<u32>,
) -> (usize, HashMap<u32, u32>) {
    let mut label: HashMap<u32, u32> = HashMap::new();
    let mut count = 0;
    for &seed in members {
        if label.contains_key(&seed) {
            continue;
        }
        let comp = count as u32;
        count += 1;
        let mut stack = vec![seed];
        label.insert(seed, comp);
        while let Some(t) = stack.pop() {
            for n in adjacency(t) {
                if members.contains(&n) && !label.contains_key(&n) {
                    label.insert(n, comp);
                    stack.push(n);
                }
            }
        }
    }
    (count, label)
}

pub fn check_simple_connectivity(mesh: &TetMesh) -> Result<ConnectivityReport, MeshError> {
    let adj = build_adjacency(mesh)?;
    let live: Vec<u32> = mesh.live_tets().map(|(i, _)| i as u32).collect();
    let mut report = ConnectivityReport {
        component_of: vec![u32::MAX; mesh.tets.len()],
        ..Default::default()
    };
    if live.is_empty() {
        report.connected = true;
        return Ok(report);
    }

    // Global face components.
    let mut count = 0usize;
    for &seed in &live {
        if report.component_of[seed as usize] != u32::MAX {
            continue;
        }
        let comp = count as u32;
        count += 1;
        let mut stack = vec![seed];
        report.component_of[seed as usize] = comp;
        while let Some(t) = stack.pop() {
            for n in adj.neighbors_of(t) {
                if report.component_of[n as usize] == u32::MAX {
                    report.component_of[n as usize] = comp;
                    stack.push(n);
                }
            }
        }
    }
    report.component_count = count;

    // Vertex stars.
    let stars = mesh.vertex_stars();
    for (v, star) in stars.iter().enumerate() {
        if star.len() < 2 {
            continue;
        }
        let (groups, _) = label_components(star, |t| {
            adj.neighbors_of(t)
                .filter(|n| mesh.tets[*n as usize].verts.contains(&(v as u32)))
                .collect()
        });
        if groups > 1 {
            report.pinch_vertices.push(v as u32);
        }
    }

    // Edge stars: gather tets per edge, then group by shared faces that
    // contain both endpoints.
    let mut edge_stars: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (i, tet) in mesh.live_tets() {
        for (a, b) in tet.edges() {
            let key = (a.min(b), a.max(b));
            edge_stars.entry(key).or_default().push(i as u32);
        }
    }
    let mut edges: Vec<_> = edge_stars.into_iter().collect();
    edges.sort_unstable_by_key(|(k, _)| *k);
    for ((a, b), star) in edges {
        if star.len() < 2 {
            continue;
        }
        let (groups, _) = label_components(&star, |t| {
            adj.neighbors_of(t)
                .filter(|n| {
                    let vs = &mesh.tets[*n as usize].verts;
                    vs.contains(&a) && vs.contains(&b)
                })
                .collect()
        });
        if groups > 1 {
            report.pinch_edges.push((a, b));
        }
    }

    report.connected =
        report.component_count == 1 && report.pinch_vertices.is_empty() && report.pinch_edges.is_empty();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{sample, Tetrahedron, Vertex};

    #[test]
    fn two_tets_sharing_face_are_simple() {
        let report = check_simple_connectivity(&sample::two_tets()).unwrap();
        assert!(report.connected);
        assert!(report.pinch_vertices.is_empty());
        assert!(report.pinch_edges.is_empty());
    }

    #[test]
    fn vertex_pinch_detected() {
        // Two tets sharing exactly one vertex.
        let mut mesh = sample::single_tet();
        let shared = 0u32;
        let base = mesh.vertices.len() as u32;
        let g = |i| crate::mesh::GlobalId::new(0, i);
        mesh.vertices
            .push(Vertex::new([-1.0, 0.0, 0.0], g(base as u64)));
        mesh.vertices
            .push(Vertex::new([0.0, -1.0, 0.0], g(base as u64 + 1)));
        mesh.vertices
            .push(Vertex::new([-0.3, -0.3, -0.9], g(base as u64 + 2)));
        // Keep orientation positive.
        let t = Tetrahedron::new([shared, base + 1, base, base + 2]);
        let vol = crate::mesh::tet_volume(
            mesh.position(t.verts[0]),
            mesh.position(t.verts[1]),
            mesh.position(t.verts[2]),
            mesh.position(t.verts[3]),
        );
        assert!(vol > 0.0);
        mesh.tets.push(t);

        let report = check_simple_connectivity(&mesh).unwrap();
        assert!(!report.connected);
        assert_eq!(report.component_count, 2);
        assert_eq!(report.pinch_vertices, vec![shared]);
    }

    #[test]
    fn edge_pinch_detected() {
        // Two tets sharing exactly one edge (0-1), rotated apart.
        let mut mesh = sample::single_tet();
        let base = mesh.vertices.len() as u32;
        let g = |i| crate::mesh::GlobalId::new(0, i);
        mesh.vertices
            .push(Vertex::new([0.4, -1.0, 0.1], g(base as u64)));
        mesh.vertices
            .push(Vertex::new([0.6, -1.0, -0.8], g(base as u64 + 1)));
        let t = Tetrahedron::new([0, 1, base, base + 1]);
        let vol = crate::mesh::tet_volume(
            mesh.position(t.verts[0]),
            mesh.position(t.verts[1]),
            mesh.position(t.verts[2]),
            mesh.position(t.verts[3]),
        );
        assert!(vol > 0.0, "test tet inverted: {vol}");
        mesh.tets.push(t);

        let report = check_simple_connectivity(&mesh).unwrap();
        assert!(!report.connected);
        assert!(report.pinch_edges.contains(&(0, 1)));
    }

    #[test]
    fn ball_minus_interior_star_matches_bfs_oracle() {
        // Remove an interior vertex star from a box mesh and compare the
        // report against a per-vertex brute-force star labeling.
        let mut mesh = sample::box_mesh(3, 3, 3);
        // Find an interior vertex.
        let interior = mesh
            .vertices
            .iter()
            .position(|v| !v.is_boundary())
            .expect("3x3x3 box has interior vertices") as u32;
        for t in mesh.tets.iter_mut() {
            if t.verts.contains(&interior) {
                t.flags |= crate::mesh::TET_DEAD;
            }
        }
        let report = check_simple_connectivity(&mesh).unwrap();

        // Oracle: per-vertex star BFS using only face adjacency.
        let adj = build_adjacency(&mesh).unwrap();
        let stars = mesh.vertex_stars();
        let mut oracle_pinches = Vec::new();
        for (v, star) in stars.iter().enumerate() {
            if star.len() < 2 {
                continue;
            }
            let mut seen = vec![star[0]];
            let mut stack = vec![star[0]];
            while let Some(t) = stack.pop() {
                for n in adj.neighbors_of(t) {
                    if star.contains(&n)
                        && mesh.tets[n as usize].verts.contains(&(v as u32))
                        && !seen.contains(&n)
                    {
                        seen.push(n);
                        stack.push(n);
                    }
                }
            }
            if seen.len() != star.len() {
                oracle_pinches.push(v as u32);
            }
        }
        assert_eq!(report.pinch_vertices, oracle_pinches);
    }
}
