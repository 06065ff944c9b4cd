//! Face-based adjacency between tets.

use std::collections::HashMap;

use super::{MeshError, TetMesh};

/// A face keyed by its sorted local vertex indices.
pub type FaceKey = [u32; 3];

pub fn face_key(f: [u32; 3]) -> FaceKey {
    let mut k = f;
    k.sort_unstable();
    k
}

/// For each tet, the neighbor across each of its four faces
/// (`neighbors[t][k]` faces vertex `k` of tet `t`). `None` means the face is
/// exposed (domain boundary or subdomain interface).
#[derive(Debug, Clone)]
pub struct FaceAdjacency {
    pub neighbors: Vec<[Option<u32>; 4]>,
}

impl FaceAdjacency {
    pub fn neighbors_of(&self, t: u32) -> impl Iterator<Item = u32> + '_ {
        self.neighbors[t as usize].iter().filter_map(|n| *n)
    }
}

/// Multiplicity of every face of the live tets.
pub fn face_multiplicities(mesh: &TetMesh) -> HashMap<FaceKey, Vec<(u32, u8)>> {
    let mut faces: HashMap<FaceKey, Vec<(u32, u8)>> = HashMap::new();
    for (i, tet) in mesh.live_tets() {
        for (k, f) in tet.faces().iter().enumerate() {
            faces
                .entry(face_key(*f))
                .or_default()
                .push((i as u32, k as u8));
        }
    }
    faces
}

/// Build the face-adjacency table. Errors if any face occurs in more than
/// two live tets.
pub fn build_adjacency(mesh: &TetMesh) -> Result<FaceAdjacency, MeshError> {
    mesh.validate_indices()?;
    let faces = face_multiplicities(mesh);
    let mut neighbors = vec![[None; 4]; mesh.tets.len()];
    for (key, owners) in faces {
        match owners.as_slice() {
            [_] => {}
            [(t0, k0), (t1, k1)] => {
                neighbors[*t0 as usize][*k0 as usize] = Some(*t1);
                neighbors[*t1 as usize][*k1 as usize] = Some(*t0);
            }
            many => return Err(MeshError::NonManifoldFace(key, many.len())),
        }
    }
    Ok(FaceAdjacency { neighbors })
}
