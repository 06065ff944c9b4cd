//! Complexity, metric edge length and mean-ratio shape measure.

use crate::mesh::{geometry, TetMesh};

use super::field::{FieldKind, MetricField};
use super::tensor::{arithmetic_mean, log_euclidean_mean, MetricTensor};
use super::MetricError;

/// 36 / 3^(1/3): normalizes the mean ratio so a regular tet scores 1.
pub const MEAN_RATIO_FACTOR: f64 = 24.96100587662285;

/// Threshold on |L_a - L_b| below which the two per-endpoint lengths are
/// averaged instead of log-interpolated.
pub const EDGE_LENGTH_BRANCH_THRESHOLD: f64 = 0.001;

/// Tets with |volume| at or below this are treated as degenerate.
pub const VOLUME_EPS: f64 = 1e-30;

/// How the centroid tensor of a tet is built from vertex tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanInterp {
    #[default]
    LogEuclidean,
    Arithmetic,
}

pub fn interpolate(tensors: &[MetricTensor], interp: MeanInterp) -> MetricTensor {
    match interp {
        MeanInterp::LogEuclidean => log_euclidean_mean(tensors),
        MeanInterp::Arithmetic => arithmetic_mean(tensors),
    }
}

/// Discrete complexity: sum over vertices of sqrt(det M_i) * V_i, where V_i
/// is the barycentric dual volume (a quarter of each incident tet).
pub fn discrete_complexity(mesh: &TetMesh, field: &MetricField) -> Result<f64, MetricError> {
    let mut dual = vec![0.0; mesh.vertices.len()];
    for (i, tet) in mesh.live_tets() {
        let q = mesh.tet_volume(i) / 4.0;
        for &v in &tet.verts {
            dual[v as usize] += q;
        }
    }
    let mut total = 0.0;
    for (i, v) in mesh.vertices.iter().enumerate() {
        if v.is_dead() || dual[i] == 0.0 {
            continue;
        }
        let t = field.at_vertex(i, v.position)?;
        let det = t.det();
        if det <= 0.0 {
            return Err(MetricError::NonSpd(i));
        }
        total += det.sqrt() * dual[i];
    }
    Ok(total)
}

/// Rescale the field so its discrete complexity equals `target`. Every
/// tensor is multiplied by (target / C)^(2/3).
pub fn scale_to_complexity(
    field: &MetricField,
    mesh: &TetMesh,
    target: f64,
) -> Result<MetricField, MetricError> {
    if target <= 0.0 {
        return Err(MetricError::InvalidTarget(target));
    }
    let c = discrete_complexity(mesh, field)?;
    if c <= 0.0 {
        return Err(MetricError::InvalidTarget(c));
    }
    Ok(field.scaled_by((target / c).powf(2.0 / 3.0)))
}

/// Metric length of the segment a -> b given the endpoint tensors.
pub fn metric_edge_length(
    a: [f64; 3],
    b: [f64; 3],
    ma: &MetricTensor,
    mb: &MetricTensor,
) -> Result<f64, MetricError> {
    let v = geometry::sub(b, a);
    if v == [0.0; 3] {
        return Err(MetricError::ZeroEdge);
    }
    let la = ma.quadratic_form(v).max(0.0).sqrt();
    let lb = mb.quadratic_form(v).max(0.0).sqrt();
    if (la - lb).abs() > EDGE_LENGTH_BRANCH_THRESHOLD {
        Ok((la - lb) / (la / lb).ln())
    } else {
        Ok(0.5 * (la + lb))
    }
}

/// Mean-ratio shape measure of a tet under the tensor `m_mean`. In [0, 1]
/// by construction, 1 for a regular tet in its own metric.
pub fn mean_ratio_with_tensor(
    positions: &[[f64; 3]; 4],
    m_mean: &MetricTensor,
) -> Result<f64, MetricError> {
    let vol = geometry::tet_volume(positions[0], positions[1], positions[2], positions[3]);
    if vol.abs() <= VOLUME_EPS {
        return Err(MetricError::DegenerateTet(vol));
    }
    let det = m_mean.det();
    if det <= 0.0 {
        return Err(MetricError::NonSpd(usize::MAX));
    }
    let mut edge_sum = 0.0;
    for i in 0..3 {
        for j in (i + 1)..4 {
            edge_sum += m_mean.quadratic_form(geometry::sub(positions[j], positions[i]));
        }
    }
    Ok(MEAN_RATIO_FACTOR * (vol.abs() * det.sqrt()).powf(2.0 / 3.0) / edge_sum)
}

/// Mean ratio of a tet with per-vertex tensors: the centroid tensor is the
/// interpolated mean of the four.
pub fn mean_ratio_with_vertex_tensors(
    positions: &[[f64; 3]; 4],
    tensors: &[MetricTensor; 4],
    interp: MeanInterp,
) -> Result<f64, MetricError> {
    mean_ratio_with_tensor(positions, &interpolate(tensors, interp))
}

/// Mean ratio of live tet `t` of a mesh under a field. Analytic fields are
/// evaluated at the centroid directly; discrete fields interpolate the four
/// vertex tensors.
pub fn mean_ratio(
    mesh: &TetMesh,
    t: usize,
    field: &MetricField,
    interp: MeanInterp,
) -> Result<f64, MetricError> {
    let tet = &mesh.tets[t];
    let positions = tet.verts.map(|v| mesh.position(v));
    let m_mean = match field.kind() {
        FieldKind::Analytic(_) => field
            .at_point(geometry::tet_centroid(
                positions[0],
                positions[1],
                positions[2],
                positions[3],
            ))
            .expect("analytic field answers at_point"),
        FieldKind::Discrete(_) => {
            let mut ts = [MetricTensor::identity(); 4];
            for (k, &v) in tet.verts.iter().enumerate() {
                ts[k] = field.at_vertex(v as usize, mesh.position(v))?;
            }
            interpolate(&ts, interp)
        }
    };
    mean_ratio_with_tensor(&positions, &m_mean)
}

/// Continuous complexity by per-tet quadrature of sqrt(det M(x)).
/// `order` 1 uses the centroid rule, 2 the four-point degree-2 rule; higher
/// values apply `order - 2` levels of red refinement under the four-point
/// rule.
pub fn continuous_complexity(
    field: &MetricField,
    mesh: &TetMesh,
    order: u32,
) -> Result<f64, MetricError> {
    if !field.is_analytic() {
        return Err(MetricError::BadSpec(
            "continuous complexity needs an analytic field".into(),
        ));
    }
    let mut total = 0.0;
    for (i, tet) in mesh.live_tets() {
        let p = tet.verts.map(|v| mesh.position(v));
        total += tet_quadrature(field, &p, order);
        let _ = i;
    }
    Ok(total)
}

fn tet_quadrature(field: &MetricField, p: &[[f64; 3]; 4], order: u32) -> f64 {
    match order {
        0 | 1 => quad_rule(field, p, &[([0.25; 4], 1.0)]),
        2 => four_point(field, p),
        n => {
            // Red refinement: 4 corner tets plus 4 around a diagonal of the
            // central octahedron.
            let m = |i: usize, j: usize| {
                geometry::scale(geometry::add(p[i], p[j]), 0.5)
            };
            let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
            let (mab, mac, mad, mbc, mbd, mcd) =
                (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
            let subs: [[[f64; 3]; 4]; 8] = [
                [a, mab, mac, mad],
                [mab, b, mbc, mbd],
                [mac, mbc, c, mcd],
                [mad, mbd, mcd, d],
                [mab, mcd, mac, mbc],
                [mab, mcd, mbc, mbd],
                [mab, mcd, mbd, mad],
                [mab, mcd, mad, mac],
            ];
            subs.iter().map(|s| tet_quadrature(field, s, n - 1)).sum()
        }
    }
}

fn four_point(field: &MetricField, p: &[[f64; 3]; 4]) -> f64 {
    const A: f64 = 0.585_410_196_624_968_5;
    const B: f64 = 0.138_196_601_125_010_5;
    let pts = [
        ([A, B, B, B], 0.25),
        ([B, A, B, B], 0.25),
        ([B, B, A, B], 0.25),
        ([B, B, B, A], 0.25),
    ];
    quad_rule(field, p, &pts)
}

fn quad_rule(field: &MetricField, p: &[[f64; 3]; 4], pts: &[([f64; 4], f64)]) -> f64 {
    let vol = geometry::tet_volume(p[0], p[1], p[2], p[3]).abs();
    let mut acc = 0.0;
    for (bary, w) in pts {
        let mut x = [0.0; 3];
        for k in 0..4 {
            x = geometry::add(x, geometry::scale(p[k], bary[k]));
        }
        let det = field
            .at_point(x)
            .expect("analytic field answers at_point")
            .det();
        acc += w * det.max(0.0).sqrt();
    }
    acc * vol
}
