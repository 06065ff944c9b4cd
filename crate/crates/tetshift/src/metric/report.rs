//! Conformity reports: edge-length and mean-ratio histograms plus summary
//! statistics.

use std::collections::BTreeSet;

use crate::mesh::TetMesh;

use super::conformity::{mean_ratio, metric_edge_length, MeanInterp};
use super::field::MetricField;
use super::MetricError;

pub const HIST_BINS: usize = 50;
/// Log-spaced edge bins span [2^-4, 2^4].
pub const EDGE_LOG_MIN: f64 = -4.0;
pub const EDGE_LOG_MAX: f64 = 4.0;
/// Edges in [1/sqrt(2), sqrt(2)] count as unit.
pub const UNIT_BAND_LO: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const UNIT_BAND_HI: f64 = std::f64::consts::SQRT_2;
/// Tets below this mean ratio count as low quality.
pub const DEFAULT_QUALITY_FLOOR: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub edge_hist: [u64; HIST_BINS],
    pub quality_hist: [u64; HIST_BINS],
    pub edge_count: u64,
    pub tet_count: u64,
    pub edges_in_unit_band: u64,
    pub tets_at_or_above_floor: u64,
    pub quality_floor: f64,
    pub min_edge: f64,
    pub mean_edge: f64,
    pub max_edge: f64,
    pub min_quality: f64,
    pub mean_quality: f64,
}

impl QualityReport {
    pub fn unit_band_fraction(&self) -> f64 {
        if self.edge_count == 0 {
            1.0
        } else {
            self.edges_in_unit_band as f64 / self.edge_count as f64
        }
    }

    pub fn quality_fraction(&self) -> f64 {
        if self.tet_count == 0 {
            1.0
        } else {
            self.tets_at_or_above_floor as f64 / self.tet_count as f64
        }
    }

    pub fn edge_bin_edges(i: usize) -> (f64, f64) {
        let step = (EDGE_LOG_MAX - EDGE_LOG_MIN) / HIST_BINS as f64;
        let lo = EDGE_LOG_MIN + step * i as f64;
        (2f64.powf(lo), 2f64.powf(lo + step))
    }

    pub fn quality_bin_edges(i: usize) -> (f64, f64) {
        let step = 1.0 / HIST_BINS as f64;
        (step * i as f64, step * (i as f64 + 1.0))
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "section,bin_lo,bin_hi,value");
        for i in 0..HIST_BINS {
            let (lo, hi) = Self::edge_bin_edges(i);
            let _ = writeln!(out, "edge_hist,{lo:?},{hi:?},{}", self.edge_hist[i]);
        }
        for i in 0..HIST_BINS {
            let (lo, hi) = Self::quality_bin_edges(i);
            let _ = writeln!(out, "quality_hist,{lo:?},{hi:?},{}", self.quality_hist[i]);
        }
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "summary,{k},,{v}");
        };
        kv("edge_count", self.edge_count.to_string());
        kv("tet_count", self.tet_count.to_string());
        kv("edges_in_unit_band", self.edges_in_unit_band.to_string());
        kv("unit_band_fraction", format!("{:?}", self.unit_band_fraction()));
        kv("tets_at_or_above_floor", self.tets_at_or_above_floor.to_string());
        kv("quality_fraction", format!("{:?}", self.quality_fraction()));
        kv("quality_floor", format!("{:?}", self.quality_floor));
        kv("min_edge", format!("{:?}", self.min_edge));
        kv("mean_edge", format!("{:?}", self.mean_edge));
        kv("max_edge", format!("{:?}", self.max_edge));
        kv("min_quality", format!("{:?}", self.min_quality));
        kv("mean_quality", format!("{:?}", self.mean_quality));
        out
    }

    /// Parse histogram counts back from [`Self::to_csv`] output, for the
    /// comparison mode. Returns (edge counts, quality counts).
    pub fn histograms_from_csv(text: &str) -> Result<(Vec<u64>, Vec<u64>), MetricError> {
        let mut edges = Vec::new();
        let mut quals = Vec::new();
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                continue;
            }
            let parse = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| MetricError::BadSpec(format!("bad count {s:?}: {e}")))
            };
            match fields[0] {
                "edge_hist" => edges.push(parse(fields[3])?),
                "quality_hist" => quals.push(parse(fields[3])?),
                _ => {}
            }
        }
        if edges.len() != HIST_BINS || quals.len() != HIST_BINS {
            return Err(MetricError::BadSpec(format!(
                "expected {HIST_BINS} bins, found {} edge / {} quality",
                edges.len(),
                quals.len()
            )));
        }
        Ok((edges, quals))
    }
}

fn edge_bin(l: f64) -> usize {
    let step = (EDGE_LOG_MAX - EDGE_LOG_MIN) / HIST_BINS as f64;
    let b = ((l.log2() - EDGE_LOG_MIN) / step).floor();
    (b.max(0.0) as usize).min(HIST_BINS - 1)
}

fn quality_bin(q: f64) -> usize {
    ((q * HIST_BINS as f64).floor().max(0.0) as usize).min(HIST_BINS - 1)
}

/// Collect the unique edges of the live tets.
pub fn unique_edges(mesh: &TetMesh) -> BTreeSet<(u32, u32)> {
    let mut edges = BTreeSet::new();
    for (_, tet) in mesh.live_tets() {
        for (a, b) in tet.edges() {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges
}

pub fn quality_report(
    mesh: &TetMesh,
    field: &MetricField,
    quality_floor: f64,
    interp: MeanInterp,
) -> Result<QualityReport, MetricError> {
    let mut report = QualityReport {
        edge_hist: [0; HIST_BINS],
        quality_hist: [0; HIST_BINS],
        edge_count: 0,
        tet_count: 0,
        edges_in_unit_band: 0,
        tets_at_or_above_floor: 0,
        quality_floor,
        min_edge: f64::INFINITY,
        mean_edge: 0.0,
        max_edge: f64::NEG_INFINITY,
        min_quality: f64::INFINITY,
        mean_quality: 0.0,
    };

    for (a, b) in unique_edges(mesh) {
        let (pa, pb) = (mesh.position(a), mesh.position(b));
        let ma = field.at_vertex(a as usize, pa)?;
        let mb = field.at_vertex(b as usize, pb)?;
        let l = metric_edge_length(pa, pb, &ma, &mb)?;
        report.edge_hist[edge_bin(l)] += 1;
        report.edge_count += 1;
        if (UNIT_BAND_LO..=UNIT_BAND_HI).contains(&l) {
            report.edges_in_unit_band += 1;
        }
        report.min_edge = report.min_edge.min(l);
        report.max_edge = report.max_edge.max(l);
        report.mean_edge += l;
    }
    for (i, _) in mesh.live_tets() {
        let q = mean_ratio(mesh, i, field, interp)?;
        report.quality_hist[quality_bin(q)] += 1;
        report.tet_count += 1;
        if q >= quality_floor {
            report.tets_at_or_above_floor += 1;
        }
        report.min_quality = report.min_quality.min(q);
        report.mean_quality += q;
    }
    if report.edge_count > 0 {
        report.mean_edge /= report.edge_count as f64;
    } else {
        report.min_edge = 0.0;
        report.max_edge = 0.0;
    }
    if report.tet_count > 0 {
        report.mean_quality /= report.tet_count as f64;
    } else {
        report.min_quality = 0.0;
    }
    Ok(report)
}

/// A tet is low quality when its mean ratio is below the floor or any of
/// its edges leaves the unit band.
pub fn tet_is_low_quality(
    mesh: &TetMesh,
    t: usize,
    field: &MetricField,
    quality_floor: f64,
    interp: MeanInterp,
) -> Result<bool, MetricError> {
    let q = mean_ratio(mesh, t, field, interp)?;
    if q < quality_floor {
        return Ok(true);
    }
    for (a, b) in mesh.tets[t].edges() {
        let (pa, pb) = (mesh.position(a), mesh.position(b));
        let ma = field.at_vertex(a as usize, pa)?;
        let mb = field.at_vertex(b as usize, pb)?;
        let l = metric_edge_length(pa, pb, &ma, &mb)?;
        if !(UNIT_BAND_LO..=UNIT_BAND_HI).contains(&l) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Count of low-quality live tets.
pub fn low_quality_count(
    mesh: &TetMesh,
    field: &MetricField,
    quality_floor: f64,
    interp: MeanInterp,
) -> Result<usize, MetricError> {
    let mut n = 0;
    for (i, _) in mesh.live_tets() {
        if tet_is_low_quality(mesh, i, field, quality_floor, interp)? {
            n += 1;
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::sample;

    #[test]
    fn regular_tet_all_unit() {
        let mesh = sample::regular_tet();
        let report =
            quality_report(&mesh, &MetricField::uniform(1.0), DEFAULT_QUALITY_FLOOR, MeanInterp::LogEuclidean)
                .unwrap();
        assert_eq!(report.edge_count, 6);
        assert_eq!(report.edges_in_unit_band, 6);
        assert_eq!(report.unit_band_fraction(), 1.0);
        // All quality mass in the bin containing 1.0 (the last bin).
        assert_eq!(report.quality_hist[HIST_BINS - 1], 1);
        assert!((report.mean_quality - 1.0).abs() < 1e-12);
        assert_eq!(
            report.edge_hist.iter().sum::<u64>(),
            report.edge_count
        );
        assert_eq!(report.quality_hist.iter().sum::<u64>(), report.tet_count);
    }

    #[test]
    fn out_of_range_lengths_clamp_to_end_bins() {
        let mesh = sample::regular_tet();
        // Spacing 100 makes edges 0.01 in the metric (below 2^-4).
        let tiny = quality_report(&mesh, &MetricField::uniform(100.0), 0.8, MeanInterp::LogEuclidean)
            .unwrap();
        assert_eq!(tiny.edge_hist[0], 6);
        let huge = quality_report(&mesh, &MetricField::uniform(0.01), 0.8, MeanInterp::LogEuclidean)
            .unwrap();
        assert_eq!(huge.edge_hist[HIST_BINS - 1], 6);
    }

    #[test]
    fn csv_round_trips_histograms() {
        let mesh = sample::box_mesh(2, 2, 2);
        let report = quality_report(
            &mesh,
            &MetricField::uniform(0.5),
            DEFAULT_QUALITY_FLOOR,
            MeanInterp::LogEuclidean,
        )
        .unwrap();
        let csv = report.to_csv();
        let (e, q) = QualityReport::histograms_from_csv(&csv).unwrap();
        assert_eq!(e, report.edge_hist.to_vec());
        assert_eq!(q, report.quality_hist.to_vec());
    }

    #[test]
    fn low_quality_counts_edges_outside_band() {
        let mesh = sample::regular_tet();
        // Unit metric: perfect. Metric 9I: edges are length 3, low quality.
        assert_eq!(
            low_quality_count(&mesh, &MetricField::uniform(1.0), 0.8, MeanInterp::LogEuclidean)
                .unwrap(),
            0
        );
        assert_eq!(
            low_quality_count(
                &mesh,
                &MetricField::uniform(1.0).scaled_by(9.0),
                0.8,
                MeanInterp::LogEuclidean
            )
            .unwrap(),
            1
        );
    }
}
