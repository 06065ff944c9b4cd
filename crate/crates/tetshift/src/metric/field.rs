//! Metric fields: analytic closures over position or per-vertex arrays.

use std::path::Path;

use super::tensor::MetricTensor;
use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(&self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(MetricError::BadSpec(format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticField {
    /// Isotropic, spacing `h` everywhere.
    Uniform { h: f64 },
    /// Spacing along `axis` grows linearly from `h0` at coordinate 0:
    /// `h(t) = h0 * (1 + growth * t)`. Spacing across the axis is 1.
    LinearBoundaryLayer { h0: f64, growth: f64, axis: Axis },
    /// Isotropic with spacing growing with distance from the origin:
    /// `h(r) = h0 * (1 + growth * r)`.
    Radial { h0: f64, growth: f64 },
}

impl AnalyticField {
    pub fn tensor_at(&self, p: [f64; 3]) -> MetricTensor {
        match self {
            AnalyticField::Uniform { h } => MetricTensor::from_spacing(*h),
            AnalyticField::LinearBoundaryLayer { h0, growth, axis } => {
                let t = p[axis.index()].abs();
                let hn = h0 * (1.0 + growth * t);
                let mut h = [1.0, 1.0, 1.0];
                h[axis.index()] = hn;
                MetricTensor::from_spacings(h)
            }
            AnalyticField::Radial { h0, growth } => {
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                MetricTensor::from_spacing(h0 * (1.0 + growth * r))
            }
        }
    }
}

/// A metric field, either analytic or sampled per vertex, with a global
/// scale factor applied on evaluation (used by complexity rescaling).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    kind: FieldKind,
    scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Analytic(AnalyticField),
    Discrete(Vec<MetricTensor>),
}

impl MetricField {
    pub fn analytic(a: AnalyticField) -> Self {
        Self {
            kind: FieldKind::Analytic(a),
            scale: 1.0,
        }
    }

    pub fn uniform(h: f64) -> Self {
        Self::analytic(AnalyticField::Uniform { h })
    }

    pub fn discrete(tensors: Vec<MetricTensor>) -> Self {
        Self {
            kind: FieldKind::Discrete(tensors),
            scale: 1.0,
        }
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.kind, FieldKind::Analytic(_))
    }

    /// Tensor at a mesh vertex.
    pub fn at_vertex(&self, index: usize, position: [f64; 3]) -> Result<MetricTensor, MetricError> {
        let t = match &self.kind {
            FieldKind::Analytic(a) => a.tensor_at(position),
            FieldKind::Discrete(ts) => *ts.get(index).ok_or(MetricError::DimensionMismatch {
                expected: index + 1,
                got: ts.len(),
            })?,
        };
        Ok(t.scaled(self.scale))
    }

    /// Tensor at an arbitrary point; only analytic fields can answer.
    pub fn at_point(&self, position: [f64; 3]) -> Option<MetricTensor> {
        match &self.kind {
            FieldKind::Analytic(a) => Some(a.tensor_at(position).scaled(self.scale)),
            FieldKind::Discrete(_) => None,
        }
    }

    /// Multiply every tensor by `factor`.
    pub fn scaled_by(&self, factor: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            scale: self.scale * factor,
        }
    }

    pub fn vertex_count(&self) -> Option<usize> {
        match &self.kind {
            FieldKind::Analytic(_) => None,
            FieldKind::Discrete(ts) => Some(ts.len()),
        }
    }

    /// Parse a CLI metric spec: `uniform:h`,
    /// `linear-boundary-layer:h0,growth,axis`, `radial[:h0,growth]`,
    /// `file:path`.
    pub fn parse_spec(spec: &str) -> Result<Self, MetricError> {
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n, a),
            None => (spec, ""),
        };
        let parts: Vec<&str> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').collect()
        };
        let f = |s: &str| -> Result<f64, MetricError> {
            s.trim()
                .parse()
                .map_err(|e| MetricError::BadSpec(format!("bad number {s:?}: {e}")))
        };
        match name {
            "uniform" => {
                if parts.len() != 1 {
                    return Err(MetricError::BadSpec("uniform:h takes one parameter".into()));
                }
                Ok(Self::uniform(f(parts[0])?))
            }
            "linear-boundary-layer" => {
                if parts.len() != 3 {
                    return Err(MetricError::BadSpec(
                        "linear-boundary-layer:h0,growth,axis takes three parameters".into(),
                    ));
                }
                Ok(Self::analytic(AnalyticField::LinearBoundaryLayer {
                    h0: f(parts[0])?,
                    growth: f(parts[1])?,
                    axis: parts[2].trim().parse()?,
                }))
            }
            "radial" => {
                let (h0, growth) = match parts.as_slice() {
                    [] => (0.1, 1.0),
                    [a, b] => (f(a)?, f(b)?),
                    _ => {
                        return Err(MetricError::BadSpec(
                            "radial takes zero or two parameters".into(),
                        ))
                    }
                };
                Ok(Self::analytic(AnalyticField::Radial { h0, growth }))
            }
            "file" => {
                if parts.len() != 1 {
                    return Err(MetricError::BadSpec("file:path takes one parameter".into()));
                }
                read_metric_file(Path::new(parts[0]))
            }
            other => Err(MetricError::BadSpec(format!("unknown metric {other:?}"))),
        }
    }
}

/// Discrete metric file: line 1 `nVerts`, then six components per line
/// `m11 m12 m13 m22 m23 m33`. Comments start with `#`.
pub fn read_metric_file(path: &Path) -> Result<MetricField, MetricError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MetricError::BadSpec(format!("cannot read {}: {e}", path.display())))?;
    read_metric_str(&text)
}

pub fn read_metric_str(text: &str) -> Result<MetricField, MetricError> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| MetricError::BadSpec("empty metric file".into()))?
        .parse()
        .map_err(|e| MetricError::BadSpec(format!("bad vertex count: {e}")))?;
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let l = lines
            .next()
            .ok_or_else(|| MetricError::BadSpec(format!("metric file ends at tensor {i}")))?;
        let vals: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|e| MetricError::BadSpec(format!("line {}: {e}", i + 2)))?;
        if vals.len() != 6 {
            return Err(MetricError::BadSpec(format!(
                "tensor {i} has {} components, expected 6",
                vals.len()
            )));
        }
        let t = MetricTensor::new([vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]]);
        if !t.is_spd() {
            return Err(MetricError::NonSpd(i));
        }
        tensors.push(t);
    }
    Ok(MetricField::discrete(tensors))
}

pub fn write_metric_string(field: &MetricField) -> Result<String, MetricError> {
    use std::fmt::Write as _;
    let FieldKind::Discrete(ts) = &field.kind else {
        return Err(MetricError::BadSpec("cannot write analytic field".into()));
    };
    let mut out = String::new();
    let _ = writeln!(out, "{}", ts.len());
    for t in ts {
        let s = t.scaled(field.scale);
        let _ = writeln!(
            out,
            "{:?} {:?} {:?} {:?} {:?} {:?}",
            s.c[0], s.c[1], s.c[2], s.c[3], s.c[4], s.c[5]
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_uniform() {
        let f = MetricField::parse_spec("uniform:0.25").unwrap();
        let t = f.at_vertex(0, [0.3, 0.3, 0.3]).unwrap();
        assert!((t.c[0] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn parse_boundary_layer_and_radial() {
        let f = MetricField::parse_spec("linear-boundary-layer:0.1,2.0,z").unwrap();
        let t = f.at_vertex(0, [0.0, 0.0, 0.5]).unwrap();
        // h_z at z=0.5 is 0.1*(1+1) = 0.2.
        assert!((t.c[5] - 25.0).abs() < 1e-9);
        assert!((t.c[0] - 1.0).abs() < 1e-12);

        let r = MetricField::parse_spec("radial").unwrap();
        assert!(r.at_point([0.0, 0.0, 0.0]).is_some());
        assert!(MetricField::parse_spec("radial:0.2,0.5").is_ok());
        assert!(MetricField::parse_spec("nope:1").is_err());
    }

    #[test]
    fn metric_file_round_trip() {
        let f = MetricField::discrete(vec![
            MetricTensor::identity(),
            MetricTensor::new([4.0, 1.0, 0.0, 3.0, 0.5, 2.0]),
        ]);
        let text = write_metric_string(&f).unwrap();
        let back = read_metric_str(&text).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn metric_file_rejects_non_spd() {
        let text = "1\n-1 0 0 1 0 1\n";
        assert!(matches!(read_metric_str(text), Err(MetricError::NonSpd(0))));
    }

    #[test]
    fn scaling_composes() {
        let f = MetricField::uniform(0.5).scaled_by(4.0);
        let t = f.at_vertex(0, [0.0; 3]).unwrap();
        assert!((t.c[0] - 16.0).abs() < 1e-12);
    }
}
