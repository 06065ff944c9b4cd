//! The shared-memory adaptation engine.
//!
//! Local operators (edge collapse, edge split, 2-3 and 3-2 swaps, vertex
//! smoothing) run speculatively: an operation locks its cavity with atomic
//! test-and-set words, rolls back on any conflict and retargets other
//! data. Frozen interface elements always fail to lock, and no point is
//! ever created inside the buffer zone around them.

mod locks;
mod ops;
mod session;

use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::mesh::{MeshError, Subdomain};
use crate::metric::{MeanInterp, MetricError, UNIT_BAND_HI, UNIT_BAND_LO};

pub use locks::CavityLocks;
pub use session::adapt;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid adapt config: {0}")]
    InvalidConfig(String),
    #[error("frozen geometry changed during adaptation")]
    FreezeViolation,
    #[error("mesh verification failed {0}")]
    Verify(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdaptPhase {
    /// First pass over a freshly decomposed subdomain: pre-coarsening
    /// collapse, then refinement rounds.
    #[default]
    InitialInterior,
    /// Mixed interior/interface pass after a shift: no pre-collapse.
    Mii,
    /// One coarsening pass once shifting has completed.
    FinalCollapse,
    /// Swaps and smoothing only.
    QualityImprovement,
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    pub phase: AdaptPhase,
    /// Rounds of split/swap/smooth per adapt call.
    pub pass_budget: u32,
    /// Edges longer than this (in the metric) are split.
    pub split_threshold: f64,
    /// Edges shorter than this are collapsed.
    pub collapse_threshold: f64,
    /// Mean-ratio target; tets below it count as low quality.
    pub quality_floor: f64,
    /// Face-hop layers around frozen elements where point creation is
    /// forbidden.
    pub buffer_layers: u32,
    pub interp: MeanInterp,
    /// Run full conformity checks after every sweep (tests).
    pub verify_each_sweep: bool,
    /// Record the committed-op log in the outcome (tests).
    pub record_log: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            phase: AdaptPhase::InitialInterior,
            pass_budget: 8,
            split_threshold: UNIT_BAND_HI,
            collapse_threshold: UNIT_BAND_LO,
            quality_floor: 0.8,
            buffer_layers: 1,
            interp: MeanInterp::LogEuclidean,
            verify_each_sweep: false,
            record_log: false,
        }
    }
}

impl AdaptConfig {
    pub fn with_phase(phase: AdaptPhase) -> Self {
        Self {
            phase,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !(self.split_threshold > 1.0 && 1.0 > self.collapse_threshold && self.collapse_threshold > 0.0)
        {
            return Err(KernelError::InvalidConfig(format!(
                "need split > 1 > collapse > 0, got split {} collapse {}",
                self.split_threshold, self.collapse_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.quality_floor) {
            return Err(KernelError::InvalidConfig(format!(
                "quality floor {} outside [0, 1]",
                self.quality_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Collapse,
    Split,
    Swap23,
    Swap32,
    Smooth,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub attempted: u64,
    pub committed: u64,
    pub rolled_back: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone)]
pub struct CommittedRecord {
    pub sweep: u32,
    pub kind: OpKind,
    pub cavity: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct TaskOutcome {
    pub collapse: OpCounters,
    pub split: OpCounters,
    pub swap23: OpCounters,
    pub swap32: OpCounters,
    pub smooth: OpCounters,
    pub sweeps: u32,
    /// Sweeps that committed nothing while sub-threshold work remained
    /// (normal near frozen interfaces; that work waits for a shift).
    pub stalls: u32,
    pub new_vertices: u64,
    pub final_vertex_count: u64,
    pub final_tet_count: u64,
    pub committed_log: Option<Vec<CommittedRecord>>,
}

impl TaskOutcome {
    pub(crate) fn counters_mut(&mut self, op: OpKind) -> &mut OpCounters {
        match op {
            OpKind::Collapse => &mut self.collapse,
            OpKind::Split => &mut self.split,
            OpKind::Swap23 => &mut self.swap23,
            OpKind::Swap32 => &mut self.swap32,
            OpKind::Smooth => &mut self.smooth,
        }
    }

    pub fn all_counters(&self) -> [(OpKind, OpCounters); 5] {
        [
            (OpKind::Collapse, self.collapse),
            (OpKind::Split, self.split),
            (OpKind::Swap23, self.swap23),
            (OpKind::Swap32, self.swap32),
            (OpKind::Smooth, self.smooth),
        ]
    }

    pub fn total_committed(&self) -> u64 {
        self.all_counters().iter().map(|(_, c)| c.committed).sum()
    }

    /// attempted = committed + rolled back + rejected, per operator.
    pub fn accounting_consistent(&self) -> bool {
        self.all_counters()
            .iter()
            .all(|(_, c)| c.attempted == c.committed + c.rolled_back + c.rejected)
    }
}

/// Order-independent hash of the frozen elements' geometry (gids plus
/// coordinate bits). Unchanged across any interior adaptation call.
pub fn frozen_geometry_hash(sub: &Subdomain) -> u64 {
    let mut records: Vec<Vec<(u32, u64, [u64; 3])>> = sub
        .mesh
        .live_tets()
        .filter(|(_, t)| t.is_frozen())
        .map(|(_, t)| {
            let mut r: Vec<(u32, u64, [u64; 3])> = t
                .verts
                .iter()
                .map(|&v| {
                    let vert = &sub.mesh.vertices[v as usize];
                    (vert.gid.owner, vert.gid.local, vert.position.map(f64::to_bits))
                })
                .collect();
            r.sort_unstable();
            r
        })
        .collect();
    records.sort_unstable();
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    records.hash(&mut hasher);
    hasher.finish()
}

#[cfg(test)]
mod tests;
