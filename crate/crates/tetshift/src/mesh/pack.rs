//! Flat-buffer serialization of subdomains.
//!
//! Fixed little-endian header followed by flat arrays; every integer is
//! 64-bit. Buffers are fully self-contained so they can cross any channel
//! (in-process queue today, socket later) unchanged.

use std::collections::{BTreeMap, BTreeSet};

use super::{BoundaryFacet, GlobalId, MeshError, SubState, Subdomain, TetMesh, Tetrahedron, Vertex};

const MAGIC: u64 = 0x5445_5453_4849_4654; // "TETSHIFT"
const VERSION: u64 = 1;

pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self { buf: Vec::new() }
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.buf.extend_from_slice(b);
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], MeshError> {
        if self.pos + n > self.buf.len() {
            return Err(MeshError::MalformedBuffer(format!(
                "truncated: need {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.buf.len()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64, MeshError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn i64(&mut self) -> Result<i64, MeshError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, MeshError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], MeshError> {
        let n = self.u64()? as usize;
        self.take(n)
    }

    pub fn count(&mut self, what: &str, cap: usize) -> Result<usize, MeshError> {
        let n = self.u64()? as usize;
        // Each record is at least 8 bytes; reject counts the buffer cannot hold.
        if n > cap {
            return Err(MeshError::MalformedBuffer(format!(
                "{what} count {n} exceeds remaining buffer capacity"
            )));
        }
        Ok(n)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(&self) -> Result<(), MeshError> {
        if self.pos != self.buf.len() {
            return Err(MeshError::MalformedBuffer(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Serialize a subdomain. Tombstoned entities are dropped first, so packing
/// is stable: pack(unpack(pack(s))) == pack(s).
pub fn pack(sub: &Subdomain) -> Vec<u8> {
    let has_dead = sub.mesh.vertices.iter().any(|v| v.is_dead())
        || sub.mesh.tets.iter().any(|t| t.is_dead())
        || sub.mesh.boundary_facets.iter().any(|f| f.dead);
    if has_dead {
        let mut clone = sub.clone();
        clone.compact_mesh();
        return pack(&clone);
    }

    let mut w = Writer::new();
    w.u64(MAGIC);
    w.u64(VERSION);
    w.u64(sub.id as u64);
    w.u64(sub.next_local_id);
    w.u64(sub.state.code());
    w.u64(sub.mii_pass_count as u64);
    w.u64(sub.mesh.vertices.len() as u64);
    w.u64(sub.mesh.tets.len() as u64);
    w.u64(sub.mesh.boundary_facets.len() as u64);
    w.u64(sub.duplicates.len() as u64);
    w.u64(sub.neighbors.len() as u64);
    w.u64(sub.sharers.len() as u64);
    w.u64(match &sub.vertex_metrics {
        Some(m) => m.len() as u64,
        None => u64::MAX,
    });
    for v in &sub.mesh.vertices {
        w.f64(v.position[0]);
        w.f64(v.position[1]);
        w.f64(v.position[2]);
        w.u64(v.gid.owner as u64);
        w.u64(v.gid.local);
        w.u64(v.flags as u64);
    }
    for t in &sub.mesh.tets {
        for &v in &t.verts {
            w.u64(v as u64);
        }
        w.u64(t.flags as u64);
    }
    for f in &sub.mesh.boundary_facets {
        for &v in &f.verts {
            w.u64(v as u64);
        }
        w.i64(f.tag);
    }
    for (gid, idx) in &sub.duplicates {
        w.u64(gid.owner as u64);
        w.u64(gid.local);
        w.u64(*idx as u64);
    }
    for n in &sub.neighbors {
        w.u64(*n as u64);
    }
    for (gid, holders) in &sub.sharers {
        w.u64(gid.owner as u64);
        w.u64(gid.local);
        w.u64(holders.len() as u64);
        for h in holders {
            w.u64(*h as u64);
        }
    }
    if let Some(metrics) = &sub.vertex_metrics {
        for m in metrics {
            for &c in m {
                w.f64(c);
            }
        }
    }
    w.buf
}

pub fn unpack(buf: &[u8]) -> Result<Subdomain, MeshError> {
    let mut r = Reader::new(buf);
    if r.u64()? != MAGIC {
        return Err(MeshError::MalformedBuffer("bad magic".into()));
    }
    let version = r.u64()?;
    if version != VERSION {
        return Err(MeshError::MalformedBuffer(format!(
            "unsupported version {version}"
        )));
    }
    let id = r.u64()? as u32;
    let next_local_id = r.u64()?;
    let state = SubState::from_code(r.u64()?);
    let mii_pass_count = r.u64()? as u32;
    let cap = r.remaining() / 8;
    let nv = r.count("vertex", cap)?;
    let nt = r.count("tet", cap)?;
    let nf = r.count("facet", cap)?;
    let nd = r.count("duplicate", cap)?;
    let nn = r.count("neighbor", cap)?;
    let ns = r.count("sharer", cap)?;
    let nm = r.u64()?;
    if nm != u64::MAX && nm as usize != nv {
        return Err(MeshError::MalformedBuffer(format!(
            "metric array length {nm} does not match vertex count {nv}"
        )));
    }

    let mut mesh = TetMesh::new();
    for _ in 0..nv {
        let position = [r.f64()?, r.f64()?, r.f64()?];
        let gid = GlobalId::new(r.u64()? as u32, r.u64()?);
        let flags = r.u64()? as u8;
        mesh.vertices.push(Vertex { position, gid, flags });
    }
    for _ in 0..nt {
        let verts = [
            r.u64()? as u32,
            r.u64()? as u32,
            r.u64()? as u32,
            r.u64()? as u32,
        ];
        let flags = r.u64()? as u8;
        mesh.tets.push(Tetrahedron { verts, flags });
    }
    for _ in 0..nf {
        let verts = [r.u64()? as u32, r.u64()? as u32, r.u64()? as u32];
        let tag = r.i64()?;
        mesh.boundary_facets.push(BoundaryFacet::new(verts, tag));
    }
    let mut duplicates = BTreeMap::new();
    for _ in 0..nd {
        let gid = GlobalId::new(r.u64()? as u32, r.u64()?);
        let idx = r.u64()? as u32;
        if idx as usize >= nv {
            return Err(MeshError::MalformedBuffer(format!(
                "duplicate entry {gid} points past vertex array"
            )));
        }
        duplicates.insert(gid, idx);
    }
    let mut neighbors = BTreeSet::new();
    for _ in 0..nn {
        neighbors.insert(r.u64()? as u32);
    }
    let mut sharers = BTreeMap::new();
    for _ in 0..ns {
        let gid = GlobalId::new(r.u64()? as u32, r.u64()?);
        let nh = r.count("holder", r.remaining() / 8)?;
        let mut holders = BTreeSet::new();
        for _ in 0..nh {
            holders.insert(r.u64()? as u32);
        }
        sharers.insert(gid, holders);
    }
    let vertex_metrics = if nm == u64::MAX {
        None
    } else {
        let mut metrics = Vec::with_capacity(nv);
        for _ in 0..nv {
            let mut m = [0.0; 6];
            for c in m.iter_mut() {
                *c = r.f64()?;
            }
            metrics.push(m);
        }
        Some(metrics)
    };
    r.finish()?;
    mesh.validate_indices()?;
    Ok(Subdomain {
        id,
        mesh,
        duplicates,
        neighbors,
        sharers,
        vertex_metrics,
        next_local_id,
        state,
        mii_pass_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::sample;

    fn sample_sub() -> Subdomain {
        let mesh = sample::box_mesh(2, 1, 1);
        let mut sub = Subdomain::new(3, mesh);
        sub.id = 3;
        sub.neighbors.insert(1);
        sub.neighbors.insert(7);
        let g = GlobalId::new(1, 9);
        sub.mesh.vertices[0].gid = g;
        sub.duplicates.insert(g, 0);
        sub.sharers.insert(g, BTreeSet::from([1, 7]));
        sub.state = SubState::MiiAdapted(2);
        sub.mii_pass_count = 2;
        sub.vertex_metrics = Some(
            (0..sub.mesh.vertices.len())
                .map(|i| [1.0 + i as f64, 0.1, 0.0, 2.0, 0.0, 3.0])
                .collect(),
        );
        sub
    }

    #[test]
    fn round_trip_is_identity() {
        let sub = sample_sub();
        let buf = pack(&sub);
        let back = unpack(&buf).unwrap();
        assert_eq!(sub, back);
    }

    #[test]
    fn double_round_trip_is_byte_identical() {
        let sub = sample_sub();
        let b1 = pack(&sub);
        let b2 = pack(&unpack(&b1).unwrap());
        assert_eq!(b1, b2);
    }

    #[test]
    fn empty_subdomain_round_trips() {
        let sub = Subdomain::new(0, TetMesh::new());
        let buf = pack(&sub);
        assert_eq!(buf.len(), 13 * 8);
        assert_eq!(unpack(&buf).unwrap(), sub);
    }

    #[test]
    fn truncation_rejected_everywhere() {
        let buf = pack(&sample_sub());
        for cut in [0, 7, 8, 95, buf.len() - 1] {
            assert!(
                matches!(unpack(&buf[..cut]), Err(MeshError::MalformedBuffer(_))),
                "cut {cut} accepted"
            );
        }
    }

    #[test]
    fn corrupt_magic_rejected() {
        let mut buf = pack(&sample_sub());
        buf[0] ^= 0xff;
        assert!(matches!(unpack(&buf), Err(MeshError::MalformedBuffer(_))));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut buf = pack(&sample_sub());
        buf.push(0);
        assert!(matches!(unpack(&buf), Err(MeshError::MalformedBuffer(_))));
    }
}
