//! Sorting-based decomposition into quasi-uniform subdomains, owner-first
//! global id assignment, and the initial neighbor graph.
//!
//! Tets are sorted by centroid along one coordinate axis at a time and cut
//! into equal-count runs, recursively per axis. Subdomains that come out
//! pinched (connected to themselves only through a vertex or an edge) are
//! repaired by handing the offending tets to the face-adjacent neighbor
//! that shares the most faces with them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::mesh::{
    build_adjacency, check_simple_connectivity, classify_interface, face_multiplicities,
    tet_centroid, BoundaryFacet, GlobalId, MeshError, Subdomain, TetMesh,
};

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("domain cannot be split: {0}")]
    UnsplittableDomain(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Which coordinate axis each split level runs along, and how many cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionPlan {
    /// Permutation of the coordinate axes (0 = x, 1 = y, 2 = z).
    pub axis_order: [usize; 3],
    /// Split factor per entry of `axis_order`; the product is the
    /// subdomain count.
    pub splits: [usize; 3],
}

impl DecompositionPlan {
    pub fn new(axis_order: [usize; 3], splits: [usize; 3]) -> Result<Self, DecompError> {
        let mut seen = [false; 3];
        for a in axis_order {
            if a > 2 || seen[a] {
                return Err(DecompError::InvalidPlan(format!(
                    "axis order {axis_order:?} is not a permutation of x, y, z"
                )));
            }
            seen[a] = true;
        }
        if splits.iter().any(|&s| s == 0) {
            return Err(DecompError::InvalidPlan("every split factor must be >= 1".into()));
        }
        Ok(Self { axis_order, splits })
    }

    /// Split along x only.
    pub fn along_x(n: usize) -> Self {
        Self {
            axis_order: [0, 1, 2],
            splits: [n, 1, 1],
        }
    }

    /// Balanced three-way factorization of `n` applied in x, y, z order.
    pub fn balanced(n: usize) -> Self {
        let mut best = (n, 1, 1);
        let mut best_spread = n as i64 - 1;
        for a in 1..=n {
            if n % a != 0 {
                continue;
            }
            let m = n / a;
            for b in 1..=m {
                if m % b != 0 {
                    continue;
                }
                let c = m / b;
                let lo = a.min(b).min(c) as i64;
                let hi = a.max(b).max(c) as i64;
                if hi - lo < best_spread {
                    best_spread = hi - lo;
                    let mut f = [a, b, c];
                    f.sort_unstable_by(|x, y| y.cmp(x));
                    best = (f[0], f[1], f[2]);
                }
            }
        }
        Self {
            axis_order: [0, 1, 2],
            splits: [best.0, best.1, best.2],
        }
    }

    pub fn target_count(&self) -> usize {
        self.splits.iter().product()
    }

    pub fn parse(axis_order: &str, splits: &str) -> Result<Self, DecompError> {
        let axes: Vec<usize> = axis_order
            .chars()
            .map(|c| match c {
                'x' | 'X' => Ok(0),
                'y' | 'Y' => Ok(1),
                'z' | 'Z' => Ok(2),
                other => Err(DecompError::InvalidPlan(format!("bad axis {other:?}"))),
            })
            .collect::<Result<_, _>>()?;
        if axes.len() != 3 {
            return Err(DecompError::InvalidPlan("axis order needs three axes".into()));
        }
        let parts: Vec<usize> = splits
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| DecompError::InvalidPlan(format!("bad split {s:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if parts.len() != 3 {
            return Err(DecompError::InvalidPlan("splits need three factors".into()));
        }
        Self::new([axes[0], axes[1], axes[2]], [parts[0], parts[1], parts[2]])
    }
}

/// Assign each live tet to a subdomain by recursive sorted splitting.
fn assign_by_sorting(mesh: &TetMesh, plan: &DecompositionPlan) -> Vec<u32> {
    let centroids: Vec<[f64; 3]> = (0..mesh.tets.len())
        .map(|i| {
            let t = &mesh.tets[i];
            tet_centroid(
                mesh.position(t.verts[0]),
                mesh.position(t.verts[1]),
                mesh.position(t.verts[2]),
                mesh.position(t.verts[3]),
            )
        })
        .collect();
    let mut assignment = vec![0u32; mesh.tets.len()];
    let mut ids: Vec<u32> = mesh.live_tets().map(|(i, _)| i as u32).collect();

    fn recurse(
        ids: &mut [u32],
        level: usize,
        base: u32,
        plan: &DecompositionPlan,
        centroids: &[[f64; 3]],
        assignment: &mut [u32],
    ) {
        if level == 3 {
            for &t in ids.iter() {
                assignment[t as usize] = base;
            }
            return;
        }
        let axis = plan.axis_order[level];
        let k = plan.splits[level];
        // Stable ordering keeps ties deterministic.
        ids.sort_by(|&a, &b| {
            centroids[a as usize][axis]
                .partial_cmp(&centroids[b as usize][axis])
                .unwrap()
                .then(a.cmp(&b))
        });
        let n = ids.len();
        let stride: u32 = plan.splits[level + 1..].iter().product::<usize>() as u32;
        let mut start = 0;
        for part in 0..k {
            let len = n / k + usize::from(part < n % k);
            let slice = &mut ids[start..start + len];
            recurse(
                slice,
                level + 1,
                base + part as u32 * stride,
                plan,
                centroids,
                assignment,
            );
            start += len;
        }
    }
    recurse(&mut ids, 0, 0, plan, &centroids, &mut assignment);
    assignment
}

/// Move pinch components to face-adjacent neighbors until every subdomain
/// is simply connected.
fn repair_connectivity(
    mesh: &TetMesh,
    assignment: &mut [u32],
    n_subs: usize,
) -> Result<(), DecompError> {
    let adj = build_adjacency(mesh)?;
    let max_rounds = 8 * n_subs + 16;
    for _round in 0..max_rounds {
        let mut moved = false;
        for sub in 0..n_subs as u32 {
            let members: Vec<u32> = (0..mesh.tets.len() as u32)
                .filter(|&t| assignment[t as usize] == sub && !mesh.tets[t as usize].is_dead())
                .collect();
            if members.is_empty() {
                return Err(DecompError::UnsplittableDomain(format!(
                    "subdomain {sub} became empty during repair"
                )));
            }
            let groups = offending_groups(mesh, &adj, &members);
            let Some(move_out) = groups else { continue };
            for group in move_out {
                let target = best_face_neighbor(&adj, &group, assignment, sub).ok_or_else(|| {
                    DecompError::UnsplittableDomain(format!(
                        "pinch component in subdomain {sub} has no face-adjacent neighbor"
                    ))
                })?;
                for t in group {
                    assignment[t as usize] = target;
                }
                moved = true;
            }
        }
        if !moved {
            return Ok(());
        }
    }
    Err(DecompError::UnsplittableDomain(
        "connectivity repair did not converge".into(),
    ))
}

/// Groups of tets that must leave `members` to restore simple connectivity:
/// every face component except the largest, or the minority star groups of
/// the first pinch found. `None` when the set is already simple.
fn offending_groups(
    mesh: &TetMesh,
    adj: &crate::mesh::FaceAdjacency,
    members: &[u32],
) -> Option<Vec<Vec<u32>>> {
    let member_set: BTreeSet<u32> = members.iter().copied().collect();
    // Face components within the subdomain.
    let mut comp: HashMap<u32, u32> = HashMap::new();
    let mut comps: Vec<Vec<u32>> = Vec::new();
    for &seed in members {
        if comp.contains_key(&seed) {
            continue;
        }
        let id = comps.len() as u32;
        let mut group = vec![seed];
        comp.insert(seed, id);
        let mut stack = vec![seed];
        while let Some(t) = stack.pop() {
            for n in adj.neighbors_of(t) {
                if member_set.contains(&n) && !comp.contains_key(&n) {
                    comp.insert(n, id);
                    group.push(n);
                    stack.push(n);
                }
            }
        }
        comps.push(group);
    }
    if comps.len() > 1 {
        let largest = comps
            .iter()
            .enumerate()
            .max_by_key(|(i, g)| (g.len(), usize::MAX - i))
            .map(|(i, _)| i)
            .unwrap();
        return Some(
            comps
                .into_iter()
                .enumerate()
                .filter(|(i, _)| *i != largest)
                .map(|(_, g)| g)
                .collect(),
        );
    }

    // Pinch vertices/edges: group the star of each by faces containing the
    // pinch entity; move every group but the largest.
    let mut stars: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut edge_stars: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for &t in members {
        for &v in &mesh.tets[t as usize].verts {
            stars.entry(v).or_default().push(t);
        }
        for (a, b) in mesh.tets[t as usize].edges() {
            edge_stars.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let mut candidates: Vec<Vec<u32>> = Vec::new();
    for (&v, star) in stars.iter() {
        let g = star_minority(mesh, adj, star, |tet| tet.verts.contains(&v));
        if !g.is_empty() {
            candidates.push(g);
        }
    }
    for (&(a, b), star) in edge_stars.iter() {
        let g = star_minority(mesh, adj, star, |tet| {
            tet.verts.contains(&a) && tet.verts.contains(&b)
        });
        if !g.is_empty() {
            candidates.push(g);
        }
    }
    if candidates.is_empty() {
        return None;
    }
    candidates.sort_by_key(|g| g.iter().min().copied());
    Some(vec![candidates.remove(0)])
}

/// Minority tets of a star that splits into several face-connected groups
/// (connection restricted to faces containing the pinch entity).
fn star_minority<F: Fn(&crate::mesh::Tetrahedron) -> bool>(
    mesh: &TetMesh,
    adj: &crate::mesh::FaceAdjacency,
    star: &[u32],
    in_star: F,
) -> Vec<u32> {
    if star.len() < 2 {
        return Vec::new();
    }
    let star_set: BTreeSet<u32> = star.iter().copied().collect();
    let mut label: HashMap<u32, u32> = HashMap::new();
    let mut groups: Vec<Vec<u32>> = Vec::new();
    for &seed in star {
        if label.contains_key(&seed) {
            continue;
        }
        let id = groups.len() as u32;
        let mut g = vec![seed];
        label.insert(seed, id);
        let mut stack = vec![seed];
        while let Some(t) = stack.pop() {
            for n in adj.neighbors_of(t) {
                if star_set.contains(&n)
                    && in_star(&mesh.tets[n as usize])
                    && !label.contains_key(&n)
                {
                    label.insert(n, id);
                    g.push(n);
                    stack.push(n);
                }
            }
        }
        groups.push(g);
    }
    if groups.len() < 2 {
        return Vec::new();
    }
    let largest = groups
        .iter()
        .enumerate()
        .max_by_key(|(i, g)| (g.len(), usize::MAX - i))
        .map(|(i, _)| i)
        .unwrap();
    groups
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != largest)
        .flat_map(|(_, g)| g)
        .collect()
}

/// The subdomain sharing the most faces with `group`, ties to the lower id.
fn best_face_neighbor(
    adj: &crate::mesh::FaceAdjacency,
    group: &[u32],
    assignment: &[u32],
    own: u32,
) -> Option<u32> {
    let group_set: BTreeSet<u32> = group.iter().copied().collect();
    let mut shared: BTreeMap<u32, usize> = BTreeMap::new();
    for &t in group {
        for n in adj.neighbors_of(t) {
            let s = assignment[n as usize];
            if s != own && !group_set.contains(&n) {
                *shared.entry(s).or_default() += 1;
            }
        }
    }
    shared
        .into_iter()
        .max_by_key(|(s, c)| (*c, u32::MAX - s))
        .map(|(s, _)| s)
}

/// Decompose a conforming, simply connected mesh into
/// `plan.target_count()` subdomains. Gids are assigned owner-first and the
/// neighbor graph and interface flags are installed.
pub fn decompose(mesh: &TetMesh, plan: &DecompositionPlan) -> Result<Vec<Subdomain>, DecompError> {
    let n_subs = plan.target_count();
    let n_tets = mesh.live_tet_count();
    if n_tets < n_subs {
        return Err(DecompError::UnsplittableDomain(format!(
            "{n_tets} tets cannot fill {n_subs} subdomains"
        )));
    }
    let report = check_simple_connectivity(mesh)?;
    if !report.connected {
        return Err(DecompError::UnsplittableDomain(format!(
            "input mesh is not simply connected ({} components, {} pinch vertices, {} pinch edges)",
            report.component_count,
            report.pinch_vertices.len(),
            report.pinch_edges.len()
        )));
    }

    let mut assignment = assign_by_sorting(mesh, plan);
    if n_subs > 1 {
        repair_connectivity(mesh, &mut assignment, n_subs)?;
    }

    // Boundary facets follow the tet that owns their face.
    let face_owner: HashMap<_, _> = face_multiplicities(mesh)
        .into_iter()
        .filter_map(|(key, owners)| match owners.as_slice() {
            [(t, _)] => Some((key, *t)),
            _ => None,
        })
        .collect();

    let mut subs = Vec::with_capacity(n_subs);
    for sub_id in 0..n_subs as u32 {
        let mut local = TetMesh::new();
        let mut vmap: BTreeMap<u32, u32> = BTreeMap::new();
        for (i, tet) in mesh.live_tets() {
            if assignment[i] != sub_id {
                continue;
            }
            let verts = tet.verts.map(|v| {
                *vmap.entry(v).or_insert_with(|| {
                    let idx = local.vertices.len() as u32;
                    let mut nv = mesh.vertices[v as usize];
                    // Provisional gid: the input vertex index, rewritten by
                    // assign_gids below.
                    nv.gid = GlobalId::new(0, v as u64);
                    nv.flags &= crate::mesh::VERT_BOUNDARY;
                    local.vertices.push(nv);
                    idx
                })
            });
            let mut t = *tet;
            t.verts = verts;
            t.flags = 0;
            local.tets.push(t);
        }
        if local.tets.is_empty() {
            return Err(DecompError::UnsplittableDomain(format!(
                "subdomain {sub_id} received no tets"
            )));
        }
        for f in mesh.boundary_facets.iter().filter(|f| !f.dead) {
            let mut key = f.verts;
            key.sort_unstable();
            let Some(&owner_tet) = face_owner.get(&key) else { continue };
            if assignment[owner_tet as usize] == sub_id {
                let verts = f.verts.map(|v| vmap[&v]);
                local.boundary_facets.push(BoundaryFacet::new(verts, f.tag));
            }
        }
        subs.push(Subdomain::new(sub_id, local));
    }

    assign_gids(&mut subs);
    build_neighbor_graph(&mut subs);
    for sub in subs.iter_mut() {
        let shared: BTreeSet<GlobalId> = sub.sharers.keys().copied().collect();
        classify_interface(&mut sub.mesh, |g| shared.contains(&g));
    }
    Ok(subs)
}

/// Rewrite gids owner-first: iterating subdomains in index order, the first
/// subdomain holding a point owns it; later holders record a duplicate.
pub fn assign_gids(subs: &mut [Subdomain]) {
    let mut new_gid: BTreeMap<GlobalId, GlobalId> = BTreeMap::new();
    for sub in subs.iter() {
        for (local, v) in sub.mesh.vertices.iter().enumerate() {
            new_gid
                .entry(v.gid)
                .or_insert_with(|| GlobalId::new(sub.id, local as u64));
        }
    }
    for sub in subs.iter_mut() {
        sub.duplicates.clear();
        for local in 0..sub.mesh.vertices.len() {
            let gid = new_gid[&sub.mesh.vertices[local].gid];
            sub.mesh.vertices[local].gid = gid;
            if gid.owner != sub.id {
                sub.duplicates.insert(gid, local as u32);
            }
        }
        sub.next_local_id = sub
            .mesh
            .vertices
            .iter()
            .filter(|v| v.gid.owner == sub.id)
            .map(|v| v.gid.local + 1)
            .max()
            .unwrap_or(0);
    }
}

/// Recompute the neighbor graph and sharers tables from scratch: i and j
/// are neighbors iff they hold at least one common gid.
pub fn build_neighbor_graph(subs: &mut [Subdomain]) -> Vec<BTreeSet<u32>> {
    let mut holders: BTreeMap<GlobalId, Vec<u32>> = BTreeMap::new();
    for sub in subs.iter() {
        for v in sub.mesh.vertices.iter().filter(|v| !v.is_dead()) {
            holders.entry(v.gid).or_default().push(sub.id);
        }
    }
    let mut graph = vec![BTreeSet::new(); subs.len()];
    for sub in subs.iter_mut() {
        sub.sharers.clear();
        sub.neighbors.clear();
    }
    let index_of: BTreeMap<u32, usize> = subs
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id, i))
        .collect();
    for (gid, hs) in holders.iter() {
        if hs.len() < 2 {
            continue;
        }
        for &h in hs {
            let i = index_of[&h];
            let others: BTreeSet<u32> = hs.iter().copied().filter(|&o| o != h).collect();
            graph[i].extend(others.iter().copied());
            subs[i].sharers.insert(*gid, others);
        }
    }
    for sub in subs.iter_mut() {
        sub.neighbors = graph[index_of[&sub.id]].clone();
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::sample;

    #[test]
    fn single_subdomain_keeps_everything() {
        let mesh = sample::box_mesh(2, 2, 2);
        let subs = decompose(&mesh, &DecompositionPlan::along_x(1)).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].mesh.tets.len(), mesh.tets.len());
        assert!(subs[0].duplicates.is_empty());
        assert!(subs[0].neighbors.is_empty());
        assert!(subs[0].mesh.vertices.iter().all(|v| !v.is_interface()));
        assert!(subs[0].mesh.vertices.iter().all(|v| v.gid.owner == 0));
    }

    #[test]
    fn two_way_x_split_is_balanced_with_planar_interface() {
        let mesh = sample::box_mesh(2, 2, 2);
        let subs = decompose(&mesh, &DecompositionPlan::along_x(2)).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].mesh.tets.len(), 24);
        assert_eq!(subs[1].mesh.tets.len(), 24);
        // Centroid-median oracle: every tet of sub 0 has centroid x < 0.5.
        for (i, _) in subs[0].mesh.live_tets() {
            let t = &subs[0].mesh.tets[i];
            let c = tet_centroid(
                subs[0].mesh.position(t.verts[0]),
                subs[0].mesh.position(t.verts[1]),
                subs[0].mesh.position(t.verts[2]),
                subs[0].mesh.position(t.verts[3]),
            );
            assert!(c[0] < 0.5);
        }
        // Interface vertices all sit on the cut plane.
        for sub in &subs {
            for v in sub.mesh.vertices.iter().filter(|v| v.is_interface()) {
                assert!((v.position[0] - 0.5).abs() < 1e-12);
            }
            assert!(sub.mesh.vertices.iter().any(|v| v.is_interface()));
        }
        // Ownership: sub 0 first, so every shared gid belongs to sub 0.
        assert_eq!(subs[1].duplicates.len(), 9);
        assert!(subs[0].duplicates.is_empty());
        assert!(subs[1].duplicates.keys().all(|g| g.owner == 0));
        // Geometric oracle: a tet is frozen iff it touches the plane.
        for sub in &subs {
            for (i, t) in sub.mesh.live_tets() {
                let touches = t
                    .verts
                    .iter()
                    .any(|&v| (sub.mesh.position(v)[0] - 0.5).abs() < 1e-12);
                assert_eq!(t.is_frozen(), touches, "tet {i}");
            }
        }
    }

    #[test]
    fn gid_union_preserves_tets_exactly() {
        // Multiset of tets keyed by sorted vertex coordinates must match the
        // input after decomposition.
        let mesh = sample::box_mesh(3, 2, 2);
        let subs = decompose(&mesh, &DecompositionPlan::balanced(4)).unwrap();
        let key = |m: &TetMesh, i: usize| {
            let t = &m.tets[i];
            let mut k: Vec<[u64; 3]> = t
                .verts
                .iter()
                .map(|&v| m.position(v).map(f64::to_bits))
                .collect();
            k.sort_unstable();
            k
        };
        let mut input: Vec<_> = mesh.live_tets().map(|(i, _)| key(&mesh, i)).collect();
        let mut output: Vec<_> = subs
            .iter()
            .flat_map(|s| {
                s.mesh
                    .live_tets()
                    .map(|(i, _)| key(&s.mesh, i))
                    .collect::<Vec<_>>()
            })
            .collect();
        input.sort_unstable();
        output.sort_unstable();
        assert_eq!(input, output);
    }

    #[test]
    fn path_graph_for_slab_decomposition() {
        let mesh = sample::box_mesh(8, 1, 1);
        let subs = decompose(&mesh, &DecompositionPlan::along_x(8)).unwrap();
        for (i, sub) in subs.iter().enumerate() {
            let expected: BTreeSet<u32> = [i as i64 - 1, i as i64 + 1]
                .iter()
                .filter(|&&j| j >= 0 && j < 8)
                .map(|&j| j as u32)
                .collect();
            assert_eq!(sub.neighbors, expected, "subdomain {i}");
        }
    }

    #[test]
    fn corner_subdomains_in_2x2x2_have_seven_neighbors() {
        let mesh = sample::box_mesh(4, 4, 4);
        let plan = DecompositionPlan::new([0, 1, 2], [2, 2, 2]).unwrap();
        let subs = decompose(&mesh, &plan).unwrap();
        assert_eq!(subs.len(), 8);
        for sub in &subs {
            assert_eq!(sub.neighbors.len(), 7, "subdomain {}", sub.id);
        }
        // Brute-force gid intersection oracle.
        for i in 0..8 {
            for j in 0..8 {
                if i == j {
                    continue;
                }
                let gi: BTreeSet<GlobalId> =
                    subs[i].mesh.vertices.iter().map(|v| v.gid).collect();
                let gj: BTreeSet<GlobalId> =
                    subs[j].mesh.vertices.iter().map(|v| v.gid).collect();
                let shares = gi.intersection(&gj).next().is_some();
                assert_eq!(shares, subs[i].neighbors.contains(&(j as u32)));
                // Sharers tables agree with the oracle too.
                let listed: BTreeSet<GlobalId> =
                    subs[i].shared_with(j as u32).into_iter().collect();
                let actual: BTreeSet<GlobalId> = gi.intersection(&gj).copied().collect();
                assert_eq!(listed, actual);
            }
        }
    }

    #[test]
    fn multiway_shared_point_has_one_owner() {
        // Four subdomains meet along the central edge of a 2x2x1 split.
        let mesh = sample::box_mesh(2, 2, 1);
        let plan = DecompositionPlan::new([0, 1, 2], [2, 2, 1]).unwrap();
        let subs = decompose(&mesh, &plan).unwrap();
        let sets: Vec<BTreeSet<GlobalId>> = subs
            .iter()
            .map(|s| s.mesh.vertices.iter().map(|v| v.gid).collect())
            .collect();
        let common: Vec<GlobalId> = sets[0]
            .iter()
            .filter(|g| sets[1..].iter().all(|s| s.contains(*g)))
            .copied()
            .collect();
        assert!(!common.is_empty());
        for g in common {
            assert_eq!(g.owner, 0);
            let dup_count = subs
                .iter()
                .filter(|s| s.duplicates.contains_key(&g))
                .count();
            assert_eq!(dup_count, 3);
        }
    }

    #[test]
    fn subdomains_stay_simply_connected() {
        for (mesh, plan) in [
            (sample::box_mesh(4, 4, 4), DecompositionPlan::balanced(8)),
            (sample::box_mesh(6, 2, 2), DecompositionPlan::along_x(6)),
            (
                sample::box_mesh(3, 3, 3),
                DecompositionPlan::new([2, 1, 0], [3, 1, 2]).unwrap(),
            ),
        ] {
            let subs = decompose(&mesh, &plan).unwrap();
            for sub in &subs {
                let report = check_simple_connectivity(&sub.mesh).unwrap();
                assert!(report.connected, "subdomain {} pinched", sub.id);
            }
        }
    }

    #[test]
    fn balance_within_ten_percent_for_powers_of_two() {
        let mesh = sample::box_mesh(4, 4, 4);
        for n in [2usize, 4, 8] {
            let subs = decompose(&mesh, &DecompositionPlan::balanced(n)).unwrap();
            let counts: Vec<usize> = subs.iter().map(|s| s.mesh.live_tet_count()).collect();
            let max = *counts.iter().max().unwrap() as f64;
            let min = *counts.iter().min().unwrap() as f64;
            assert!(max / min <= 1.1, "n={n}: {counts:?}");
        }
    }

    #[test]
    fn too_many_subdomains_rejected() {
        let mesh = sample::box_mesh(1, 1, 1);
        assert!(matches!(
            decompose(&mesh, &DecompositionPlan::along_x(7)),
            Err(DecompError::UnsplittableDomain(_))
        ));
    }

    #[test]
    fn neighbor_graph_rebuild_is_symmetric() {
        let mesh = sample::box_mesh(3, 3, 1);
        let plan = DecompositionPlan::new([0, 1, 2], [3, 3, 1]).unwrap();
        let mut subs = decompose(&mesh, &plan).unwrap();
        let graph = build_neighbor_graph(&mut subs);
        for (i, nbrs) in graph.iter().enumerate() {
            for &j in nbrs {
                assert!(graph[j as usize].contains(&(i as u32)));
            }
        }
    }

    #[test]
    fn balanced_factorization() {
        assert_eq!(DecompositionPlan::balanced(8).splits, [2, 2, 2]);
        assert_eq!(DecompositionPlan::balanced(12).splits, [3, 2, 2]);
        assert_eq!(DecompositionPlan::balanced(7).splits, [7, 1, 1]);
        assert_eq!(DecompositionPlan::balanced(1).splits, [1, 1, 1]);
    }
}
