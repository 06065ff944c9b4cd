//! A subdomain: one partition of the global mesh plus the bookkeeping
//! needed to exchange interface data with its neighbors.

use std::collections::{BTreeMap, BTreeSet};

use super::{classify_interface, GlobalId, TetMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubState {
    Decomposed,
    InteriorAdapted,
    /// Mixed interior/interface adaptation completed `k` times.
    MiiAdapted(u32),
}

impl SubState {
    pub fn code(&self) -> u64 {
        match self {
            SubState::Decomposed => 0,
            SubState::InteriorAdapted => 1,
            SubState::MiiAdapted(k) => 2 + *k as u64,
        }
    }

    pub fn from_code(code: u64) -> Self {
        match code {
            0 => SubState::Decomposed,
            1 => SubState::InteriorAdapted,
            k => SubState::MiiAdapted((k - 2) as u32),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub id: u32,
    pub mesh: TetMesh,
    /// Local index of every vertex whose gid is owned elsewhere.
    pub duplicates: BTreeMap<GlobalId, u32>,
    /// Subdomains believed to share at least one gid with this one.
    pub neighbors: BTreeSet<u32>,
    /// Which other subdomains hold a copy of each shared vertex. Vertices
    /// held only here have no entry.
    pub sharers: BTreeMap<GlobalId, BTreeSet<u32>>,
    /// Per-vertex metric tensors (six components each), present when the
    /// run uses a discrete field. Aligned with `mesh.vertices`, dead slots
    /// included.
    pub vertex_metrics: Option<Vec<[f64; 6]>>,
    /// Next fresh local id for points created here.
    pub next_local_id: u64,
    pub state: SubState,
    pub mii_pass_count: u32,
}

impl Subdomain {
    pub fn new(id: u32, mesh: TetMesh) -> Self {
        let next_local_id = mesh
            .vertices
            .iter()
            .filter(|v| v.gid.owner == id)
            .map(|v| v.gid.local + 1)
            .max()
            .unwrap_or(0);
        Self {
            id,
            mesh,
            duplicates: BTreeMap::new(),
            neighbors: BTreeSet::new(),
            sharers: BTreeMap::new(),
            vertex_metrics: None,
            next_local_id,
            state: SubState::Decomposed,
            mii_pass_count: 0,
        }
    }

    /// Compact the mesh and remap every index-keyed side table.
    pub fn compact_mesh(&mut self) {
        let vmap = self.mesh.compact();
        self.duplicates = self
            .duplicates
            .iter()
            .filter_map(|(g, i)| vmap.get(i).map(|ni| (*g, *ni)))
            .collect();
        if let Some(metrics) = &mut self.vertex_metrics {
            let mut next = vec![[0.0; 6]; self.mesh.vertices.len()];
            for (old, new) in vmap.iter() {
                next[*new as usize] = metrics[*old as usize];
            }
            *metrics = next;
        }
    }

    /// Mint a fresh gid owned by this subdomain.
    pub fn fresh_gid(&mut self) -> GlobalId {
        let gid = GlobalId::new(self.id, self.next_local_id);
        self.next_local_id += 1;
        gid
    }

    /// Map gid to local vertex index over live vertices.
    pub fn gid_index(&self) -> BTreeMap<GlobalId, u32> {
        self.mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_dead())
            .map(|(i, v)| (v.gid, i as u32))
            .collect()
    }

    /// Gids this subdomain believes are shared with `other`.
    pub fn shared_with(&self, other: u32) -> Vec<GlobalId> {
        self.sharers
            .iter()
            .filter(|(_, holders)| holders.contains(&other))
            .map(|(gid, _)| *gid)
            .collect()
    }

    /// Recompute interface/frozen flags from the sharers table and refresh
    /// the neighbor set it implies.
    pub fn reclassify(&mut self) {
        let shared: BTreeSet<GlobalId> = self
            .sharers
            .iter()
            .filter(|(_, holders)| !holders.is_empty())
            .map(|(g, _)| *g)
            .collect();
        classify_interface(&mut self.mesh, |g| shared.contains(&g));
        self.neighbors = self
            .sharers
            .values()
            .flat_map(|holders| holders.iter().copied())
            .collect();
        self.neighbors.remove(&self.id);
    }

    /// Drop sharer entries for gids this subdomain no longer holds, and
    /// empty holder sets.
    pub fn prune_sharers(&mut self) {
        let held: BTreeSet<GlobalId> = self
            .mesh
            .vertices
            .iter()
            .filter(|v| !v.is_dead())
            .map(|v| v.gid)
            .collect();
        self.sharers
            .retain(|gid, holders| held.contains(gid) && !holders.is_empty());
    }

    /// Count of live tets considered low quality by the given predicate.
    pub fn count_tets<F: Fn(usize) -> bool>(&self, pred: F) -> usize {
        self.mesh.live_tets().filter(|(i, _)| pred(*i)).count()
    }
}
