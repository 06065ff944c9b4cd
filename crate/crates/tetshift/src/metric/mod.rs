//! Metric tensor fields and conformity measures.
//!
//! A metric field prescribes desired edge lengths and orientations: an edge
//! of length one in the metric is at target size. Complexity integrates
//! sqrt(det M) over the domain and predicts mesh density (about 2C vertices
//! and 12C tets at full conformity).

mod conformity;
mod field;
mod report;
mod tensor;

use thiserror::Error;

pub use conformity::{
    continuous_complexity, discrete_complexity, interpolate, mean_ratio, mean_ratio_with_tensor,
    mean_ratio_with_vertex_tensors, metric_edge_length, scale_to_complexity, MeanInterp,
    EDGE_LENGTH_BRANCH_THRESHOLD, MEAN_RATIO_FACTOR, VOLUME_EPS,
};
pub use field::{read_metric_file, read_metric_str, write_metric_string, AnalyticField, Axis, FieldKind, MetricField};
pub use report::{
    low_quality_count, quality_report, tet_is_low_quality, unique_edges, QualityReport,
    DEFAULT_QUALITY_FLOOR, HIST_BINS, UNIT_BAND_HI, UNIT_BAND_LO,
};
pub use tensor::{arithmetic_mean, log_euclidean_mean, MetricTensor};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("tensor at vertex {0} is not positive definite")]
    NonSpd(usize),
    #[error("invalid target complexity {0}")]
    InvalidTarget(f64),
    #[error("degenerate tet (volume {0})")]
    DegenerateTet(f64),
    #[error("zero-length edge")]
    ZeroEdge,
    #[error("field has {got} tensors, mesh expects at least {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad metric spec: {0}")]
    BadSpec(String),
}
