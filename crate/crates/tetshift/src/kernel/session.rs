//! Sweep execution: parallel speculative analysis, serial commit.
//!
//! Each sweep snapshots the mesh, lets workers race to lock and plan
//! non-conflicting operations, then applies the commit log on one thread.
//! Locks persist to the end of the sweep, so committed cavities are
//! pairwise disjoint and serial replay is exact.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::mesh::{build_adjacency, check_simple_connectivity, Subdomain, TetMesh};
use crate::metric::{MetricField, MetricTensor, UNIT_BAND_HI, UNIT_BAND_LO};

use super::locks::CavityLocks;
use super::ops::{
    apply, plan_collapse, plan_smooth, plan_split, plan_swap23, plan_swap32, ApplyCtx, PlanCtx,
    PlannedOp,
};
use super::{AdaptConfig, AdaptPhase, CommittedRecord, KernelError, OpKind, TaskOutcome};

#[derive(Debug, Clone, Copy)]
enum Target {
    Edge(u32, u32),
    Face(u32, u8),
    Vertex(u32),
}

pub(crate) struct Session<'a> {
    pub mesh: &'a mut TetMesh,
    pub stars: Vec<Vec<u32>>,
    pub tensors: Vec<MetricTensor>,
    pub analytic: Option<&'a MetricField>,
    pub cfg: &'a AdaptConfig,
    pub threads: usize,
    pub new_vertices: Vec<u32>,
    pub outcome: TaskOutcome,
    sweep_id: u32,
}

impl<'a> Session<'a> {
    pub fn new(
        mesh: &'a mut TetMesh,
        tensors: Vec<MetricTensor>,
        analytic: Option<&'a MetricField>,
        cfg: &'a AdaptConfig,
        threads: usize,
    ) -> Self {
        let stars = mesh.vertex_stars();
        let outcome = TaskOutcome {
            committed_log: cfg.record_log.then(Vec::new),
            ..TaskOutcome::default()
        };
        Self {
            mesh,
            stars,
            tensors,
            analytic,
            cfg,
            threads: threads.max(1),
            new_vertices: Vec::new(),
            outcome,
            sweep_id: 0,
        }
    }

    /// Tets within `buffer_layers` face hops of a frozen tet (frozen tets
    /// themselves are not marked; they are excluded by the locks).
    fn buffer_mask(&self) -> Result<Vec<bool>, KernelError> {
        let mut mask = vec![false; self.mesh.tets.len()];
        if self.cfg.buffer_layers == 0 {
            return Ok(mask);
        }
        let adj = build_adjacency(self.mesh).map_err(KernelError::Mesh)?;
        let mut frontier: Vec<u32> = self
            .mesh
            .live_tets()
            .filter(|(_, t)| t.is_frozen())
            .map(|(i, _)| i as u32)
            .collect();
        let mut seen: Vec<bool> = self.mesh.tets.iter().map(|t| t.is_frozen()).collect();
        for _ in 0..self.cfg.buffer_layers {
            let mut next = Vec::new();
            for &t in &frontier {
                for n in adj.neighbors_of(t) {
                    if !seen[n as usize] {
                        seen[n as usize] = true;
                        mask[n as usize] = true;
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        Ok(mask)
    }

    fn boundary_edge_map(&self) -> HashMap<(u32, u32), Vec<u32>> {
        let mut map: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (i, f) in self.mesh.boundary_facets.iter().enumerate() {
            if f.dead {
                continue;
            }
            let [a, b, c] = f.verts;
            for (x, y) in [(a, b), (a, c), (b, c)] {
                map.entry((x.min(y), x.max(y))).or_default().push(i as u32);
            }
        }
        map
    }

    fn unique_edges(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self
            .mesh
            .live_tets()
            .flat_map(|(_, t)| t.edges())
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// A tet already at target: quality at or above the floor and all six
    /// edges inside the unit band. Such tets are skipped when collecting
    /// operator targets.
    fn adapted_mask(&self, ctx: &PlanCtx) -> Vec<bool> {
        let mut mask = vec![false; self.mesh.tets.len()];
        for (i, tet) in self.mesh.live_tets() {
            let in_band = tet.edges().iter().all(|&(a, b)| {
                let l = ctx.edge_length(a, b);
                (UNIT_BAND_LO..=UNIT_BAND_HI).contains(&l)
            });
            mask[i] = in_band && ctx.tet_quality(i as u32) >= self.cfg.quality_floor;
        }
        mask
    }

    fn collect_targets(&self, op: OpKind, ctx: &PlanCtx) -> Vec<Target> {
        match op {
            OpKind::Split => {
                let mut cands: Vec<(f64, u32, u32)> = self
                    .unique_edges()
                    .into_iter()
                    .filter_map(|(a, b)| {
                        let l = ctx.edge_length(a, b);
                        (l > self.cfg.split_threshold).then_some((l, a, b))
                    })
                    .collect();
                // Longest first.
                cands.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then((x.1, x.2).cmp(&(y.1, y.2))));
                cands.into_iter().map(|(_, a, b)| Target::Edge(a, b)).collect()
            }
            OpKind::Collapse => {
                let mut cands: Vec<(f64, u32, u32)> = self
                    .unique_edges()
                    .into_iter()
                    .filter_map(|(a, b)| {
                        let l = ctx.edge_length(a, b);
                        (l < self.cfg.collapse_threshold).then_some((l, a, b))
                    })
                    .collect();
                // Shortest first.
                cands.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then((x.1, x.2).cmp(&(y.1, y.2))));
                cands.into_iter().map(|(_, a, b)| Target::Edge(a, b)).collect()
            }
            OpKind::Swap23 => {
                let adapted = self.adapted_mask(ctx);
                let mut faces: Vec<(u32, u8)> = Vec::new();
                for (i, tet) in self.mesh.live_tets() {
                    if adapted[i] || tet.is_frozen() {
                        continue;
                    }
                    for k in 0..4u8 {
                        faces.push((i as u32, k));
                    }
                }
                faces.into_iter().map(|(t, k)| Target::Face(t, k)).collect()
            }
            OpKind::Swap32 => {
                let adapted = self.adapted_mask(ctx);
                let mut edges: Vec<(u32, u32)> = Vec::new();
                for (i, tet) in self.mesh.live_tets() {
                    if adapted[i] || tet.is_frozen() {
                        continue;
                    }
                    for (a, b) in tet.edges() {
                        edges.push((a.min(b), a.max(b)));
                    }
                }
                edges.sort_unstable();
                edges.dedup();
                edges.into_iter().map(|(a, b)| Target::Edge(a, b)).collect()
            }
            OpKind::Smooth => {
                let adapted = self.adapted_mask(ctx);
                let mut verts: Vec<u32> = Vec::new();
                for (i, tet) in self.mesh.live_tets() {
                    if adapted[i] || tet.is_frozen() {
                        continue;
                    }
                    verts.extend(tet.verts.iter().copied());
                }
                verts.sort_unstable();
                verts.dedup();
                verts
                    .into_iter()
                    .filter(|&v| {
                        let vert = &self.mesh.vertices[v as usize];
                        !vert.is_boundary() && !vert.is_interface()
                    })
                    .map(Target::Vertex)
                    .collect()
            }
        }
    }

    /// One sweep of one operator. Returns the number of committed ops and
    /// whether any candidates existed.
    fn sweep(&mut self, op: OpKind) -> Result<(u64, bool), KernelError> {
        let buffered = self.buffer_mask()?;
        let boundary_edges = self.boundary_edge_map();
        let ctx = PlanCtx {
            mesh: self.mesh,
            stars: &self.stars,
            tensors: &self.tensors,
            buffered: &buffered,
            boundary_edges: &boundary_edges,
            analytic: self.analytic,
            cfg: self.cfg,
        };
        let targets = self.collect_targets(op, &ctx);
        if targets.is_empty() {
            return Ok((0, false));
        }
        let locks = CavityLocks::new(self.mesh.tets.len(), |i| self.mesh.tets[i].is_frozen());
        let cursor = AtomicUsize::new(0);
        let log: Mutex<Vec<PlannedOp>> = Mutex::new(Vec::new());
        let counters: Mutex<(u64, u64, u64)> = Mutex::new((0, 0, 0)); // attempted, rolled back, rejected

        let worker = |_wid: usize| {
            let mut local = (0u64, 0u64, 0u64);
            loop {
                let k = cursor.fetch_add(1, Ordering::Relaxed);
                if k >= targets.len() {
                    break;
                }
                local.0 += 1;
                let planned = match targets[k] {
                    Target::Edge(a, b) => match op {
                        OpKind::Split => plan_split(&ctx, a, b),
                        OpKind::Collapse => {
                            plan_collapse(&ctx, a, b).or_else(|| plan_collapse(&ctx, b, a))
                        }
                        OpKind::Swap32 => plan_swap32(&ctx, a, b),
                        _ => unreachable!(),
                    },
                    Target::Face(t, k) => plan_swap23(&ctx, t, k),
                    Target::Vertex(v) => plan_smooth(&ctx, v),
                };
                let Some(planned) = planned else {
                    local.2 += 1;
                    continue;
                };
                if locks.try_lock_cavity(planned.cavity()) {
                    log.lock().unwrap().push(planned);
                } else {
                    local.1 += 1;
                }
            }
            let mut c = counters.lock().unwrap();
            c.0 += local.0;
            c.1 += local.1;
            c.2 += local.2;
        };

        if self.threads == 1 {
            worker(0);
        } else {
            std::thread::scope(|s| {
                for w in 0..self.threads {
                    s.spawn(move || worker(w));
                }
            });
        }

        let log = log.into_inner().unwrap();
        let (attempted, rolled_back, mut rejected) = counters.into_inner().unwrap();

        let mut committed = 0u64;
        {
            let mut apply_ctx = ApplyCtx {
                mesh: self.mesh,
                stars: &mut self.stars,
                tensors: &mut self.tensors,
                new_vertices: &mut self.new_vertices,
            };
            for planned in &log {
                if apply(&mut apply_ctx, planned) {
                    committed += 1;
                    if let Some(records) = &mut self.outcome.committed_log {
                        records.push(CommittedRecord {
                            sweep: self.sweep_id,
                            kind: planned.kind(),
                            cavity: planned.cavity().to_vec(),
                        });
                    }
                } else {
                    rejected += 1;
                }
            }
        }

        let c = self.outcome.counters_mut(op);
        c.attempted += attempted;
        c.committed += committed;
        c.rolled_back += rolled_back;
        c.rejected += rejected;
        self.outcome.sweeps += 1;
        self.sweep_id += 1;

        if self.cfg.verify_each_sweep {
            self.verify().map_err(|e| {
                KernelError::Verify(format!("after {op:?} sweep {}: {e}", self.sweep_id))
            })?;
        }
        Ok((committed, true))
    }

    /// Run sweeps of `op` until quiescent or the cap is hit. Records a
    /// stall when a sweep commits nothing while candidates remain.
    fn run_operator(&mut self, op: OpKind, cap: u32) -> Result<u64, KernelError> {
        let mut total = 0;
        for _ in 0..cap {
            let (committed, had_candidates) = self.sweep(op)?;
            total += committed;
            if committed == 0 {
                if had_candidates {
                    self.outcome.stalls += 1;
                }
                break;
            }
        }
        Ok(total)
    }

    pub fn run_phase(&mut self) -> Result<(), KernelError> {
        let budget = self.cfg.pass_budget.max(1);
        let sweep_cap = 64;
        match self.cfg.phase {
            AdaptPhase::InitialInterior => {
                // Pre-refinement coarsening, then refinement rounds.
                self.run_operator(OpKind::Collapse, sweep_cap)?;
                for _ in 0..budget {
                    let mut round = 0;
                    round += self.run_operator(OpKind::Split, sweep_cap)?;
                    round += self.run_operator(OpKind::Swap23, 4)?;
                    round += self.run_operator(OpKind::Swap32, 4)?;
                    round += self.run_operator(OpKind::Smooth, 4)?;
                    if round == 0 {
                        break;
                    }
                }
            }
            AdaptPhase::Mii => {
                for _ in 0..budget {
                    let mut round = 0;
                    round += self.run_operator(OpKind::Split, sweep_cap)?;
                    round += self.run_operator(OpKind::Swap23, 4)?;
                    round += self.run_operator(OpKind::Swap32, 4)?;
                    round += self.run_operator(OpKind::Smooth, 4)?;
                    if round == 0 {
                        break;
                    }
                }
            }
            AdaptPhase::FinalCollapse => {
                self.run_operator(OpKind::Collapse, sweep_cap)?;
            }
            AdaptPhase::QualityImprovement => {
                for _ in 0..budget {
                    let mut round = 0;
                    round += self.run_operator(OpKind::Swap23, 4)?;
                    round += self.run_operator(OpKind::Swap32, 4)?;
                    round += self.run_operator(OpKind::Smooth, 4)?;
                    if round == 0 {
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    /// Conformity, orientation and simple-connectivity checks over the
    /// current (possibly tombstoned) state.
    pub fn verify(&self) -> Result<(), String> {
        for (i, _) in self.mesh.live_tets() {
            let v = self.mesh.tet_volume(i);
            if v <= 0.0 {
                return Err(format!("tet {i} has volume {v}"));
            }
        }
        build_adjacency(self.mesh).map_err(|e| e.to_string())?;
        let report = check_simple_connectivity(self.mesh).map_err(|e| e.to_string())?;
        if !report.connected {
            return Err(format!(
                "not simply connected: {} components, {} pinch vertices, {} pinch edges",
                report.component_count,
                report.pinch_vertices.len(),
                report.pinch_edges.len()
            ));
        }
        Ok(())
    }
}

/// Adapt a subdomain toward unit metric conformity. Frozen (interface)
/// elements are never modified; no vertex is created inside the buffer
/// zone; new vertices receive fresh gids when adaptation completes.
pub fn adapt(
    sub: &mut Subdomain,
    field: &MetricField,
    cfg: &AdaptConfig,
    threads: usize,
) -> Result<TaskOutcome, KernelError> {
    cfg.validate()?;
    let frozen_before = super::frozen_geometry_hash(sub);

    // Per-vertex tensors: stored ones win, else sample the field.
    let tensors: Vec<MetricTensor> = match &sub.vertex_metrics {
        Some(stored) => stored.iter().map(|c| MetricTensor::new(*c)).collect(),
        None => {
            let mut ts = Vec::with_capacity(sub.mesh.vertices.len());
            for (i, v) in sub.mesh.vertices.iter().enumerate() {
                if v.is_dead() {
                    ts.push(MetricTensor::identity());
                } else {
                    ts.push(field.at_vertex(i, v.position).map_err(KernelError::Metric)?);
                }
            }
            ts
        }
    };
    let analytic = field.is_analytic().then_some(field);
    if analytic.is_none() && sub.vertex_metrics.is_none() {
        // A raw discrete field is only usable when it is aligned with this
        // mesh (the single-subdomain case); otherwise tensors must already
        // be stored on the subdomain.
        if field.vertex_count() != Some(sub.mesh.vertices.len()) {
            return Err(KernelError::InvalidConfig(
                "discrete field is not aligned with the subdomain; store vertex metrics".into(),
            ));
        }
    }

    let keep_metrics = sub.vertex_metrics.is_some() || !field.is_analytic();
    let mut outcome = {
        let mut session = Session::new(&mut sub.mesh, tensors, analytic, cfg, threads);
        session.run_phase()?;
        if cfg.verify_each_sweep {
            // Already verified per sweep.
        } else {
            session
                .verify()
                .map_err(|e| KernelError::Verify(format!("at completion: {e}")))?;
        }
        let Session {
            tensors,
            new_vertices,
            outcome,
            ..
        } = session;
        if keep_metrics {
            sub.vertex_metrics = Some(tensors.iter().map(|t| t.c).collect());
        }
        // Fresh gids for surviving new points, in creation order.
        let mut created = 0;
        for idx in new_vertices {
            if !sub.mesh.vertices[idx as usize].is_dead() {
                sub.mesh.vertices[idx as usize].gid = sub.fresh_gid();
                created += 1;
            }
        }
        let mut outcome = outcome;
        outcome.new_vertices = created;
        outcome
    };

    sub.compact_mesh();

    let frozen_after = super::frozen_geometry_hash(sub);
    if frozen_before != frozen_after {
        return Err(KernelError::FreezeViolation);
    }

    match cfg.phase {
        AdaptPhase::InitialInterior => sub.state = crate::mesh::SubState::InteriorAdapted,
        AdaptPhase::Mii => {
            sub.mii_pass_count += 1;
            sub.state = crate::mesh::SubState::MiiAdapted(sub.mii_pass_count);
        }
        _ => {}
    }
    outcome.final_vertex_count = sub.mesh.live_vertex_count() as u64;
    outcome.final_tet_count = sub.mesh.live_tet_count() as u64;
    Ok(outcome)
}
