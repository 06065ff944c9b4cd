//! Tetrahedral mesh representation and subdomain bookkeeping.
//!
//! Meshes are flat arrays of vertices, tetrahedra and boundary facets.
//! Vertices carry a [`GlobalId`] naming them across subdomains: the same
//! physical point duplicated in several subdomains has the same global id
//! everywhere. Faces have no identifiers of their own; they are keyed by
//! sorted vertex id triples wherever cross-subdomain identification is
//! needed.

mod adjacency;
mod connectivity;
pub(crate) mod geometry;
mod io;
mod pack;
pub mod sample;
mod scatter;
mod subdomain;

use std::collections::BTreeMap;

use thiserror::Error;

pub use adjacency::{build_adjacency, face_multiplicities, FaceAdjacency, FaceKey};
pub use connectivity::{check_simple_connectivity, ConnectivityReport};
pub use geometry::{tet_centroid, tet_volume};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use pack::{pack, unpack};
pub use scatter::{merge_scatter, Shipment, ShipmentTet, ShipmentVertex};
pub use subdomain::{SubState, Subdomain};

/// Identifies a vertex across subdomains: the subdomain that first
/// encountered the point owns it and assigns the per-subdomain counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalId {
    pub owner: u32,
    pub local: u64,
}

impl GlobalId {
    pub fn new(owner: u32, local: u64) -> Self {
        Self { owner, local }
    }
}

impl std::fmt::Display for GlobalId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.owner, self.local)
    }
}

pub const VERT_BOUNDARY: u8 = 1 << 0;
pub const VERT_INTERFACE: u8 = 1 << 1;
pub const VERT_DEAD: u8 = 1 << 2;

pub const TET_INTERFACE: u8 = 1 << 0;
pub const TET_FROZEN: u8 = 1 << 1;
pub const TET_DEAD: u8 = 1 << 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub position: [f64; 3],
    pub gid: GlobalId,
    pub flags: u8,
}

impl Vertex {
    pub fn new(position: [f64; 3], gid: GlobalId) -> Self {
        Self {
            position,
            gid,
            flags: 0,
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.flags & VERT_BOUNDARY != 0
    }

    pub fn is_interface(&self) -> bool {
        self.flags & VERT_INTERFACE != 0
    }

    pub fn is_dead(&self) -> bool {
        self.flags & VERT_DEAD != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tetrahedron {
    pub verts: [u32; 4],
    pub flags: u8,
}

impl Tetrahedron {
    pub fn new(verts: [u32; 4]) -> Self {
        Self { verts, flags: 0 }
    }

    pub fn is_interface(&self) -> bool {
        self.flags & TET_INTERFACE != 0
    }

    pub fn is_frozen(&self) -> bool {
        self.flags & TET_FROZEN != 0
    }

    pub fn is_dead(&self) -> bool {
        self.flags & TET_DEAD != 0
    }

    /// The four triangular faces, each opposite the vertex left out.
    /// Orientation is outward for a positively oriented tet.
    pub fn faces(&self) -> [[u32; 3]; 4] {
        let [a, b, c, d] = self.verts;
        [[b, c, d], [a, d, c], [a, b, d], [a, c, b]]
    }

    /// The six edges.
    pub fn edges(&self) -> [(u32, u32); 6] {
        let [a, b, c, d] = self.verts;
        [(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub verts: [u32; 3],
    pub tag: i64,
    pub dead: bool,
}

impl BoundaryFacet {
    pub fn new(verts: [u32; 3], tag: i64) -> Self {
        Self {
            verts,
            tag,
            dead: false,
        }
    }
}

/// A tetrahedral mesh. Entries may be tombstoned (dead) while local
/// operators run; [`TetMesh::compact`] drops tombstones and reindexes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<Vertex>,
    pub tets: Vec<Tetrahedron>,
    pub boundary_facets: Vec<BoundaryFacet>,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("non-manifold face {0:?} shared by {1} tets")]
    NonManifoldFace([u32; 3], usize),
    #[error("malformed buffer: {0}")]
    MalformedBuffer(String),
    #[error("conformity break: {detail} (gids {gids:?})")]
    ConformityBreak { detail: String, gids: Vec<GlobalId> },
    #[error("vertex index {0} out of range ({1} vertices)")]
    IndexOutOfRange(u32, usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TetMesh {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of live vertices.
    pub fn live_vertex_count(&self) -> usize {
        self.vertices.iter().filter(|v| !v.is_dead()).count()
    }

    /// Number of live tets.
    pub fn live_tet_count(&self) -> usize {
        self.tets.iter().filter(|t| !t.is_dead()).count()
    }

    pub fn live_tets(&self) -> impl Iterator<Item = (usize, &Tetrahedron)> {
        self.tets.iter().enumerate().filter(|(_, t)| !t.is_dead())
    }

    pub fn position(&self, v: u32) -> [f64; 3] {
        self.vertices[v as usize].position
    }

    /// Signed volume of tet `t`.
    pub fn tet_volume(&self, t: usize) -> f64 {
        let tet = &self.tets[t];
        tet_volume(
            self.position(tet.verts[0]),
            self.position(tet.verts[1]),
            self.position(tet.verts[2]),
            self.position(tet.verts[3]),
        )
    }

    /// Sum of signed volumes over live tets.
    pub fn total_volume(&self) -> f64 {
        self.live_tets().map(|(i, _)| self.tet_volume(i)).sum()
    }

    /// Check index ranges of live entities.
    pub fn validate_indices(&self) -> Result<(), MeshError> {
        let n = self.vertices.len() as u32;
        for t in self.tets.iter().filter(|t| !t.is_dead()) {
            for &v in &t.verts {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange(v, n as usize));
                }
            }
        }
        for f in self.boundary_facets.iter().filter(|f| !f.dead) {
            for &v in &f.verts {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange(v, n as usize));
                }
            }
        }
        Ok(())
    }

    /// Drop dead vertices/tets/facets and reindex. Returns the map from old
    /// vertex index to new, for callers that keep side tables.
    pub fn compact(&mut self) -> BTreeMap<u32, u32> {
        let mut vmap = BTreeMap::new();
        let mut new_vertices = Vec::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.is_dead() {
                vmap.insert(i as u32, new_vertices.len() as u32);
                new_vertices.push(*v);
            }
        }
        let remap = |v: u32| vmap[&v];
        let mut new_tets = Vec::with_capacity(self.tets.len());
        for t in self.tets.iter().filter(|t| !t.is_dead()) {
            let mut t = *t;
            t.verts = t.verts.map(remap);
            new_tets.push(t);
        }
        let mut new_facets = Vec::with_capacity(self.boundary_facets.len());
        for f in self.boundary_facets.iter().filter(|f| !f.dead) {
            let mut f = *f;
            f.verts = f.verts.map(remap);
            new_facets.push(f);
        }
        self.vertices = new_vertices;
        self.tets = new_tets;
        self.boundary_facets = new_facets;
        vmap
    }

    /// Per-vertex lists of incident live tets.
    pub fn vertex_stars(&self) -> Vec<Vec<u32>> {
        let mut stars = vec![Vec::new(); self.vertices.len()];
        for (i, t) in self.live_tets() {
            for &v in &t.verts {
                stars[v as usize].push(i as u32);
            }
        }
        stars
    }
}

/// Set the interface flag on vertices whose gid is shared, then derive tet
/// interface/frozen flags. A tet is interface iff any of its vertices is;
/// interface tets are frozen. Idempotent.
pub fn classify_interface<F: Fn(GlobalId) -> bool>(mesh: &mut TetMesh, is_shared: F) {
    for v in mesh.vertices.iter_mut() {
        if v.is_dead() {
            continue;
        }
        if is_shared(v.gid) {
            v.flags |= VERT_INTERFACE;
        } else {
            v.flags &= !VERT_INTERFACE;
        }
    }
    for i in 0..mesh.tets.len() {
        if mesh.tets[i].is_dead() {
            continue;
        }
        let interface = mesh.tets[i]
            .verts
            .iter()
            .any(|&v| mesh.vertices[v as usize].is_interface());
        if interface {
            mesh.tets[i].flags |= TET_INTERFACE | TET_FROZEN;
        } else {
            mesh.tets[i].flags &= !(TET_INTERFACE | TET_FROZEN);
        }
    }
}
