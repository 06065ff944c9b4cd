//! Distributed-memory metric-based tetrahedral mesh adaptation.
//!
//! A mesh is decomposed into subdomains that adapt their interiors
//! independently while interface elements stay frozen. Interface elements
//! are then shifted between neighboring subdomains over several iterations
//! so that every element eventually becomes interior somewhere and gets
//! adapted. All cross-subdomain coordination happens through point-to-point
//! messages between mobile objects; there are no collective operations.
//!
//! Module map:
//! - [`mesh`]: tetrahedral meshes, global vertex identifiers, subdomains,
//!   serialization, conformity and connectivity checks.
//! - [`metric`]: SPD metric tensor fields, complexity, metric edge length,
//!   mean-ratio quality and histogram reports.
//! - [`decomp`]: sorting-based decomposition and global id assignment.
//! - [`kernel`]: the shared-memory adaptation engine (speculative, locked
//!   local operators).
//! - [`runtime`]: mobile objects, handlers, dependency events, migration and
//!   message accounting over simulated execution contexts.
//! - [`orchestrator`]: the interface-shift loop (coloring, gather/scatter,
//!   mixed interior/interface adaptation, topology update).
//! - [`cli`]: command-line front end.

pub mod cli;
pub mod decomp;
pub mod kernel;
pub mod mesh;
pub mod metric;
pub mod orchestrator;
pub mod runtime;
