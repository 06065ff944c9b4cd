//! Cavity-local operator planning and application.
//!
//! Planning runs against an immutable snapshot of the mesh during the
//! parallel part of a sweep; a planned operation names its cavity (every
//! tet it will modify or whose state its validity depends on). Cavities of
//! committed operations never overlap within a sweep, so applying the
//! commit log serially is equivalent to any interleaving.

use std::collections::HashMap;

use crate::mesh::{
    geometry, BoundaryFacet, TetMesh, Tetrahedron, TET_DEAD, VERT_BOUNDARY, VERT_DEAD,
};
use crate::metric::{
    interpolate, mean_ratio_with_vertex_tensors, metric_edge_length, MetricField, MetricTensor,
    VOLUME_EPS,
};

use super::{AdaptConfig, OpKind};

/// Snapshot view shared by analysis workers within one sweep.
pub(crate) struct PlanCtx<'a> {
    pub mesh: &'a TetMesh,
    pub stars: &'a [Vec<u32>],
    pub tensors: &'a [MetricTensor],
    /// Tets within `buffer_layers` face-hops of a frozen tet.
    pub buffered: &'a [bool],
    /// Edge (sorted) -> indices of live boundary facets containing it.
    pub boundary_edges: &'a HashMap<(u32, u32), Vec<u32>>,
    pub analytic: Option<&'a MetricField>,
    pub cfg: &'a AdaptConfig,
}

#[derive(Debug, Clone)]
pub(crate) enum PlannedOp {
    Split {
        a: u32,
        b: u32,
        cavity: Vec<u32>,
        midpoint: [f64; 3],
        tensor: MetricTensor,
        boundary: bool,
        facets: Vec<u32>,
    },
    Collapse {
        from: u32,
        to: u32,
        cavity: Vec<u32>,
    },
    Swap23 {
        cavity: Vec<u32>,
        new_tets: [[u32; 4]; 3],
        diag: (u32, u32),
    },
    Swap32 {
        cavity: Vec<u32>,
        new_tets: [[u32; 4]; 2],
        tri: [u32; 3],
    },
    Smooth {
        v: u32,
        cavity: Vec<u32>,
        new_pos: [f64; 3],
        new_tensor: MetricTensor,
    },
}

impl PlannedOp {
    pub fn cavity(&self) -> &[u32] {
        match self {
            PlannedOp::Split { cavity, .. }
            | PlannedOp::Collapse { cavity, .. }
            | PlannedOp::Swap23 { cavity, .. }
            | PlannedOp::Swap32 { cavity, .. }
            | PlannedOp::Smooth { cavity, .. } => cavity,
        }
    }

    pub fn kind(&self) -> OpKind {
        match self {
            PlannedOp::Split { .. } => OpKind::Split,
            PlannedOp::Collapse { .. } => OpKind::Collapse,
            PlannedOp::Swap23 { .. } => OpKind::Swap23,
            PlannedOp::Swap32 { .. } => OpKind::Swap32,
            PlannedOp::Smooth { .. } => OpKind::Smooth,
        }
    }
}

impl<'a> PlanCtx<'a> {
    fn pos(&self, v: u32) -> [f64; 3] {
        self.mesh.position(v)
    }

    pub fn edge_length(&self, a: u32, b: u32) -> f64 {
        metric_edge_length(
            self.pos(a),
            self.pos(b),
            &self.tensors[a as usize],
            &self.tensors[b as usize],
        )
        .unwrap_or(f64::NAN)
    }

    pub fn tet_quality(&self, t: u32) -> f64 {
        let tet = &self.mesh.tets[t as usize];
        let positions = tet.verts.map(|v| self.pos(v));
        let tensors = tet.verts.map(|v| self.tensors[v as usize]);
        mean_ratio_with_vertex_tensors(&positions, &tensors, self.cfg.interp).unwrap_or(0.0)
    }

    fn quality_of(&self, verts: &[u32; 4], moved: Option<(u32, [f64; 3])>) -> f64 {
        let positions = verts.map(|v| match moved {
            Some((mv, p)) if mv == v => p,
            _ => self.pos(v),
        });
        let tensors = verts.map(|v| self.tensors[v as usize]);
        mean_ratio_with_vertex_tensors(&positions, &tensors, self.cfg.interp).unwrap_or(0.0)
    }

    fn volume_of(&self, verts: &[u32; 4], moved: Option<(u32, [f64; 3])>) -> f64 {
        let p = verts.map(|v| match moved {
            Some((mv, q)) if mv == v => q,
            _ => self.pos(v),
        });
        geometry::tet_volume(p[0], p[1], p[2], p[3])
    }

    /// Tets containing both endpoints.
    fn edge_star(&self, a: u32, b: u32) -> Vec<u32> {
        let sb = &self.stars[b as usize];
        let mut star: Vec<u32> = self.stars[a as usize]
            .iter()
            .copied()
            .filter(|t| sb.contains(t))
            .collect();
        star.sort_unstable();
        star
    }

    fn any_frozen_or_dead(&self, tets: &[u32]) -> bool {
        tets.iter().any(|&t| {
            let tet = &self.mesh.tets[t as usize];
            tet.is_dead() || tet.is_frozen()
        })
    }
}

pub(crate) fn plan_split(ctx: &PlanCtx, a: u32, b: u32) -> Option<PlannedOp> {
    let l = ctx.edge_length(a, b);
    if !(l > ctx.cfg.split_threshold) {
        return None;
    }
    let cavity = ctx.edge_star(a, b);
    if cavity.is_empty() || ctx.any_frozen_or_dead(&cavity) {
        return None;
    }
    // Point creation is forbidden inside the buffer zone.
    if cavity.iter().any(|&t| ctx.buffered[t as usize]) {
        return None;
    }
    let (pa, pb) = (ctx.pos(a), ctx.pos(b));
    let midpoint = geometry::scale(geometry::add(pa, pb), 0.5);
    // Children of every cavity tet must stay positively oriented.
    for &t in &cavity {
        let verts = ctx.mesh.tets[t as usize].verts;
        for replaced in [a, b] {
            let p = verts.map(|v| if v == replaced { midpoint } else { ctx.pos(v) });
            if geometry::tet_volume(p[0], p[1], p[2], p[3]) <= VOLUME_EPS {
                return None;
            }
        }
    }
    let key = (a.min(b), a.max(b));
    let facets = ctx.boundary_edges.get(&key).cloned().unwrap_or_default();
    let boundary = !facets.is_empty();
    let tensor = match ctx.analytic {
        Some(field) => field
            .at_point(midpoint)
            .expect("analytic field answers at_point"),
        None => interpolate(
            &[ctx.tensors[a as usize], ctx.tensors[b as usize]],
            ctx.cfg.interp,
        ),
    };
    Some(PlannedOp::Split {
        a,
        b,
        cavity,
        midpoint,
        tensor,
        boundary,
        facets,
    })
}

/// Collapse vertex `from` onto `to`. The cavity spans both stars: the
/// operation mutates star(from) and its validity reads star(to).
pub(crate) fn plan_collapse(ctx: &PlanCtx, from: u32, to: u32) -> Option<PlannedOp> {
    let vf = &ctx.mesh.vertices[from as usize];
    if vf.is_dead() || vf.is_boundary() || vf.is_interface() {
        return None;
    }
    if ctx.mesh.vertices[to as usize].is_dead() {
        return None;
    }
    let l = ctx.edge_length(from, to);
    if !(l < ctx.cfg.collapse_threshold) {
        return None;
    }
    let edge_star = ctx.edge_star(from, to);
    if edge_star.is_empty() {
        return None;
    }
    let mut cavity: Vec<u32> = ctx.stars[from as usize]
        .iter()
        .chain(ctx.stars[to as usize].iter())
        .copied()
        .collect();
    cavity.sort_unstable();
    cavity.dedup();
    if ctx.any_frozen_or_dead(&cavity) {
        return None;
    }

    // Link conditions. Vertices adjacent to both endpoints must lie on a
    // tet of the shared edge; faces adjacent to both must be faces of such
    // a tet; and no tet may turn into a copy of an existing one.
    let others = |t: u32, x: u32| -> Vec<u32> {
        ctx.mesh.tets[t as usize]
            .verts
            .iter()
            .copied()
            .filter(|&v| v != x)
            .collect()
    };
    let mut link_from: Vec<u32> = Vec::new();
    let mut pairs_from: Vec<(u32, u32)> = Vec::new();
    let mut triples_from: Vec<[u32; 3]> = Vec::new();
    for &t in &ctx.stars[from as usize] {
        let o = others(t, from);
        link_from.extend(o.iter().copied());
        for i in 0..3 {
            for j in (i + 1)..3 {
                pairs_from.push((o[i].min(o[j]), o[i].max(o[j])));
            }
        }
        let mut tr = [o[0], o[1], o[2]];
        tr.sort_unstable();
        triples_from.push(tr);
    }
    let mut link_to: Vec<u32> = Vec::new();
    let mut pairs_to: Vec<(u32, u32)> = Vec::new();
    let mut triples_to: Vec<[u32; 3]> = Vec::new();
    for &t in &ctx.stars[to as usize] {
        let o = others(t, to);
        link_to.extend(o.iter().copied());
        for i in 0..3 {
            for j in (i + 1)..3 {
                pairs_to.push((o[i].min(o[j]), o[i].max(o[j])));
            }
        }
        let mut tr = [o[0], o[1], o[2]];
        tr.sort_unstable();
        triples_to.push(tr);
    }
    let mut edge_link_verts: Vec<u32> = Vec::new();
    let mut edge_link_pairs: Vec<(u32, u32)> = Vec::new();
    for &t in &edge_star {
        let o: Vec<u32> = ctx.mesh.tets[t as usize]
            .verts
            .iter()
            .copied()
            .filter(|&v| v != from && v != to)
            .collect();
        edge_link_verts.extend(o.iter().copied());
        edge_link_pairs.push((o[0].min(o[1]), o[0].max(o[1])));
    }
    for &u in &link_from {
        if u != to && link_to.contains(&u) && !edge_link_verts.contains(&u) {
            return None;
        }
    }
    for pr in &pairs_from {
        if pr.0 != to
            && pr.1 != to
            && pairs_to.contains(pr)
            && !edge_link_pairs.contains(pr)
        {
            return None;
        }
    }
    for tr in &triples_from {
        if !tr.contains(&to) && triples_to.contains(tr) {
            return None;
        }
    }

    // Geometry: retargeted tets keep positive volume, and no retargeted
    // edge comes out longer than the split threshold.
    for &t in &ctx.stars[from as usize] {
        if edge_star.contains(&t) {
            continue;
        }
        let verts = ctx.mesh.tets[t as usize]
            .verts
            .map(|v| if v == from { to } else { v });
        if ctx.volume_of(&verts, None) <= VOLUME_EPS {
            return None;
        }
    }
    for &u in &link_from {
        if u == to || link_to.contains(&u) {
            continue;
        }
        if ctx.edge_length(to, u) > ctx.cfg.split_threshold {
            return None;
        }
    }
    Some(PlannedOp::Collapse { from, to, cavity })
}

pub(crate) fn plan_swap23(ctx: &PlanCtx, t0: u32, face_k: u8) -> Option<PlannedOp> {
    let tet0 = &ctx.mesh.tets[t0 as usize];
    if tet0.is_dead() || tet0.is_frozen() {
        return None;
    }
    let face = tet0.faces()[face_k as usize];
    let p = tet0.verts[face_k as usize];
    // The tet across the face.
    let mut across: Vec<u32> = ctx.stars[face[0] as usize]
        .iter()
        .copied()
        .filter(|t| {
            *t != t0
                && ctx.stars[face[1] as usize].contains(t)
                && ctx.stars[face[2] as usize].contains(t)
        })
        .collect();
    across.sort_unstable();
    across.dedup();
    if across.len() != 1 {
        return None;
    }
    let t1 = across[0];
    let tet1 = &ctx.mesh.tets[t1 as usize];
    if tet1.is_dead() || tet1.is_frozen() {
        return None;
    }
    let q = *tet1.verts.iter().find(|v| !face.contains(v))?;
    // New edge p-q must not already exist anywhere.
    if ctx.stars[p as usize]
        .iter()
        .any(|t| ctx.stars[q as usize].contains(t))
    {
        return None;
    }
    // `face` is outward for t0, so its normal points toward q; tets
    // [u, v, p, q] over the cyclic edges are positively oriented when the
    // configuration is swappable.
    let mut new_tets = [[0u32; 4]; 3];
    let mut new_vol = 0.0;
    for (i, (u, v)) in [(face[0], face[1]), (face[1], face[2]), (face[2], face[0])]
        .into_iter()
        .enumerate()
    {
        let verts = [u, v, p, q];
        let vol = ctx.volume_of(&verts, None);
        if vol <= VOLUME_EPS {
            return None;
        }
        new_vol += vol;
        new_tets[i] = verts;
    }
    let old_vol = ctx.volume_of(&tet0.verts, None) + ctx.volume_of(&tet1.verts, None);
    if (new_vol - old_vol).abs() > 1e-9 * old_vol.abs() {
        return None;
    }
    let q_before = ctx.tet_quality(t0).min(ctx.tet_quality(t1));
    let q_after = new_tets
        .iter()
        .map(|t| ctx.quality_of(t, None))
        .fold(f64::INFINITY, f64::min);
    if q_after <= q_before * (1.0 + 1e-12) {
        return None;
    }
    let mut cavity = vec![t0, t1];
    cavity.sort_unstable();
    Some(PlannedOp::Swap23 {
        cavity,
        new_tets,
        diag: (p.min(q), p.max(q)),
    })
}

pub(crate) fn plan_swap32(ctx: &PlanCtx, a: u32, b: u32) -> Option<PlannedOp> {
    let ring = ctx.edge_star(a, b);
    if ring.len() != 3 || ctx.any_frozen_or_dead(&ring) {
        return None;
    }
    // Boundary edges keep the surface; never swap them away.
    if ctx.boundary_edges.contains_key(&(a.min(b), a.max(b))) {
        return None;
    }
    // Apex pairs must close into a 3-cycle p-q-r.
    let mut apexes: Vec<(u32, u32)> = Vec::with_capacity(3);
    for &t in &ring {
        let o: Vec<u32> = ctx.mesh.tets[t as usize]
            .verts
            .iter()
            .copied()
            .filter(|&v| v != a && v != b)
            .collect();
        apexes.push((o[0], o[1]));
    }
    let mut verts: Vec<u32> = apexes.iter().flat_map(|&(x, y)| [x, y]).collect();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != 3 {
        return None;
    }
    let (p, q, r) = (verts[0], verts[1], verts[2]);
    for pair in [(p, q), (p, r), (q, r)] {
        let hit = apexes
            .iter()
            .any(|&(x, y)| (x.min(y), x.max(y)) == (pair.0.min(pair.1), pair.0.max(pair.1)));
        if !hit {
            return None;
        }
    }
    // Face p-q-r must not already exist.
    if ctx.stars[p as usize].iter().any(|t| {
        ctx.stars[q as usize].contains(t) && ctx.stars[r as usize].contains(t)
    }) {
        return None;
    }
    let orient = |verts: [u32; 4]| -> Option<[u32; 4]> {
        let vol = ctx.volume_of(&verts, None);
        if vol > VOLUME_EPS {
            Some(verts)
        } else if vol < -VOLUME_EPS {
            Some([verts[1], verts[0], verts[2], verts[3]])
        } else {
            None
        }
    };
    let tb = orient([p, q, r, b])?;
    let ta = orient([q, p, r, a])?;
    let new_vol = ctx.volume_of(&ta, None) + ctx.volume_of(&tb, None);
    let old_vol: f64 = ring.iter().map(|&t| ctx.mesh.tet_volume(t as usize)).sum();
    if (new_vol - old_vol).abs() > 1e-9 * old_vol.abs() {
        return None;
    }
    let q_before = ring
        .iter()
        .map(|&t| ctx.tet_quality(t))
        .fold(f64::INFINITY, f64::min);
    let q_after = ctx.quality_of(&ta, None).min(ctx.quality_of(&tb, None));
    if q_after <= q_before * (1.0 + 1e-12) {
        return None;
    }
    Some(PlannedOp::Swap32 {
        cavity: ring,
        new_tets: [ta, tb],
        tri: [p, q, r],
    })
}

pub(crate) fn plan_smooth(ctx: &PlanCtx, v: u32) -> Option<PlannedOp> {
    let vert = &ctx.mesh.vertices[v as usize];
    if vert.is_dead() || vert.is_boundary() || vert.is_interface() {
        return None;
    }
    let mut cavity = ctx.stars[v as usize].clone();
    cavity.sort_unstable();
    cavity.dedup();
    if cavity.is_empty() || ctx.any_frozen_or_dead(&cavity) {
        return None;
    }
    let mut link: Vec<u32> = cavity
        .iter()
        .flat_map(|&t| ctx.mesh.tets[t as usize].verts)
        .filter(|&u| u != v)
        .collect();
    link.sort_unstable();
    link.dedup();

    // Metric-weighted Laplacian: long-in-metric neighbors pull harder,
    // relaxed halfway to keep the move stable.
    let mut weight_sum = 0.0;
    let mut target = [0.0; 3];
    let mut dev_before = 0.0;
    for &u in &link {
        let l = ctx.edge_length(v, u);
        dev_before += (l - 1.0) * (l - 1.0);
        let w = l.max(1e-12);
        weight_sum += w;
        target = geometry::add(target, geometry::scale(ctx.pos(u), w));
    }
    let target = geometry::scale(target, 1.0 / weight_sum);
    let old_pos = ctx.pos(v);
    let new_pos = geometry::add(old_pos, geometry::scale(geometry::sub(target, old_pos), 0.5));
    if geometry::norm(geometry::sub(new_pos, old_pos)) < 1e-14 {
        return None;
    }
    let new_tensor = match ctx.analytic {
        Some(field) => field
            .at_point(new_pos)
            .expect("analytic field answers at_point"),
        None => ctx.tensors[v as usize],
    };

    let mut q_before = f64::INFINITY;
    let mut q_after = f64::INFINITY;
    for &t in &cavity {
        let verts = ctx.mesh.tets[t as usize].verts;
        q_before = q_before.min(ctx.quality_of(&verts, None));
        if ctx.volume_of(&verts, Some((v, new_pos))) <= VOLUME_EPS {
            return None;
        }
        q_after = q_after.min(ctx.quality_of(&verts, Some((v, new_pos))));
    }
    if q_after < q_before {
        return None;
    }
    // Require strict progress on the unit-length objective so smoothing
    // terminates.
    let mut dev_after = 0.0;
    for &u in &link {
        let l = metric_edge_length(
            new_pos,
            ctx.pos(u),
            &new_tensor,
            &ctx.tensors[u as usize],
        )
        .unwrap_or(f64::NAN);
        dev_after += (l - 1.0) * (l - 1.0);
    }
    if !(dev_after < dev_before - 1e-12) {
        return None;
    }
    Some(PlannedOp::Smooth {
        v,
        cavity,
        new_pos,
        new_tensor,
    })
}

/// Mutable mesh state during commit application.
pub(crate) struct ApplyCtx<'a> {
    pub mesh: &'a mut TetMesh,
    pub stars: &'a mut Vec<Vec<u32>>,
    pub tensors: &'a mut Vec<MetricTensor>,
    /// Indices of vertices created during this adapt call, in creation
    /// order; fresh gids are assigned at completion.
    pub new_vertices: &'a mut Vec<u32>,
}

impl<'a> ApplyCtx<'a> {
    fn kill_tet(&mut self, t: u32) {
        let verts = self.mesh.tets[t as usize].verts;
        self.mesh.tets[t as usize].flags |= TET_DEAD;
        for v in verts {
            let star = &mut self.stars[v as usize];
            if let Some(k) = star.iter().position(|&x| x == t) {
                star.swap_remove(k);
            }
        }
    }

    fn add_tet(&mut self, verts: [u32; 4]) -> u32 {
        let id = self.mesh.tets.len() as u32;
        self.mesh.tets.push(Tetrahedron::new(verts));
        for v in verts {
            self.stars[v as usize].push(id);
        }
        id
    }

    fn add_vertex(&mut self, pos: [f64; 3], flags: u8, tensor: MetricTensor) -> u32 {
        let id = self.mesh.vertices.len() as u32;
        // Provisional gid; rewritten when adaptation completes.
        let gid = crate::mesh::GlobalId::new(u32::MAX, id as u64);
        let mut v = crate::mesh::Vertex::new(pos, gid);
        v.flags = flags;
        self.mesh.vertices.push(v);
        self.stars.push(Vec::new());
        self.tensors.push(tensor);
        self.new_vertices.push(id);
        id
    }
}

/// Apply a planned operation. Returns false when a commit-time recheck
/// fails (counted as a rejection, not an error).
pub(crate) fn apply(ctx: &mut ApplyCtx, op: &PlannedOp) -> bool {
    match op {
        PlannedOp::Split {
            a,
            b,
            cavity,
            midpoint,
            tensor,
            boundary,
            facets,
        } => {
            let flags = if *boundary { VERT_BOUNDARY } else { 0 };
            let m = ctx.add_vertex(*midpoint, flags, *tensor);
            for &t in cavity {
                let verts = ctx.mesh.tets[t as usize].verts;
                ctx.kill_tet(t);
                ctx.add_tet(verts.map(|v| if v == *b { m } else { v }));
                ctx.add_tet(verts.map(|v| if v == *a { m } else { v }));
            }
            for &f in facets {
                let BoundaryFacet { verts, tag, .. } = ctx.mesh.boundary_facets[f as usize];
                ctx.mesh.boundary_facets[f as usize].dead = true;
                ctx.mesh
                    .boundary_facets
                    .push(BoundaryFacet::new(verts.map(|v| if v == *b { m } else { v }), tag));
                ctx.mesh
                    .boundary_facets
                    .push(BoundaryFacet::new(verts.map(|v| if v == *a { m } else { v }), tag));
            }
            true
        }
        PlannedOp::Collapse { from, to, cavity } => {
            let star_from = ctx.stars[*from as usize].clone();
            for &t in &star_from {
                debug_assert!(cavity.contains(&t));
                if ctx.mesh.tets[t as usize].verts.contains(to) {
                    ctx.kill_tet(t);
                } else {
                    for slot in ctx.mesh.tets[t as usize].verts.iter_mut() {
                        if *slot == *from {
                            *slot = *to;
                        }
                    }
                    ctx.stars[*to as usize].push(t);
                }
            }
            ctx.mesh.vertices[*from as usize].flags |= VERT_DEAD;
            ctx.stars[*from as usize].clear();
            true
        }
        PlannedOp::Swap23 {
            cavity,
            new_tets,
            diag,
            ..
        } => {
            // Another committed swap may have created the diagonal first.
            let (p, q) = *diag;
            if ctx.stars[p as usize]
                .iter()
                .any(|t| ctx.stars[q as usize].contains(t))
            {
                return false;
            }
            for &t in cavity {
                ctx.kill_tet(t);
            }
            for verts in new_tets {
                ctx.add_tet(*verts);
            }
            true
        }
        PlannedOp::Swap32 {
            cavity,
            new_tets,
            tri,
            ..
        } => {
            let [p, q, r] = *tri;
            if ctx.stars[p as usize].iter().any(|t| {
                ctx.stars[q as usize].contains(t) && ctx.stars[r as usize].contains(t)
            }) {
                return false;
            }
            for &t in cavity {
                ctx.kill_tet(t);
            }
            for verts in new_tets {
                ctx.add_tet(*verts);
            }
            true
        }
        PlannedOp::Smooth {
            v,
            new_pos,
            new_tensor,
            ..
        } => {
            ctx.mesh.vertices[*v as usize].position = *new_pos;
            ctx.tensors[*v as usize] = *new_tensor;
            true
        }
    }
}
