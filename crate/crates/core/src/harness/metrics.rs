//! Trajectory error metrics.

use std::fmt;
use std::io::Write;

use crate::geometry::{geodesic_angle, translation_distance};
use crate::{Error, Result};

use super::record::TrajectoryRecord;

pub const TIMESTAMP_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_LOSS_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameError {
    pub timestamp: f64,
    /// Meters.
    pub translation: f64,
    /// Radians.
    pub rotation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub frames: Vec<FrameError>,
    pub median_translation: f64,
    pub p95_translation: f64,
    pub max_translation: f64,
    pub median_rotation: f64,
    pub p95_rotation: f64,
    pub max_rotation: f64,
    /// Share of frames whose translation error exceeds `loss_threshold`.
    pub loss_fraction: f64,
    pub loss_threshold: f64,
}

/// Linear interpolation between order statistics at rank `q·(n−1)`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Per-frame errors of `estimate` against `truth`. Rows are paired in
/// order and their timestamps must agree within 1 µs.
pub fn per_frame(estimate: &TrajectoryRecord, truth: &TrajectoryRecord) -> Result<Vec<FrameError>> {
    if estimate.len() != truth.len() {
        return Err(Error::TimestampMismatch(format!(
            "{} estimate rows vs {} ground-truth rows",
            estimate.len(),
            truth.len()
        )));
    }
    estimate
        .rows
        .iter()
        .zip(&truth.rows)
        .enumerate()
        .map(|(k, ((te, pe), (tt, pt)))| {
            if (te - tt).abs() > TIMESTAMP_TOLERANCE {
                return Err(Error::TimestampMismatch(format!("row {}: {} vs {}", k, te, tt)));
            }
            Ok(FrameError {
                timestamp: *tt,
                translation: translation_distance(pe, pt),
                rotation: geodesic_angle(pe, pt),
            })
        })
        .collect()
}

impl Metrics {
    pub fn from_errors(frames: Vec<FrameError>, loss_threshold: f64) -> Self {
        let t: Vec<f64> = frames.iter().map(|f| f.translation).collect();
        let r: Vec<f64> = frames.iter().map(|f| f.rotation).collect();
        let lost = t.iter().filter(|&&e| e > loss_threshold).count();
        Self {
            median_translation: median(&t),
            p95_translation: quantile(&t, 0.95),
            max_translation: t.iter().copied().fold(f64::NAN, f64::max),
            median_rotation: median(&r),
            p95_rotation: quantile(&r, 0.95),
            max_rotation: r.iter().copied().fold(f64::NAN, f64::max),
            loss_fraction: if frames.is_empty() { 0.0 } else { lost as f64 / frames.len() as f64 },
            loss_threshold,
            frames,
        }
    }

    pub fn compute(estimate: &TrajectoryRecord, truth: &TrajectoryRecord, loss_threshold: f64) -> Result<Self> {
        Ok(Self::from_errors(per_frame(estimate, truth)?, loss_threshold))
    }

    /// `timestamp,translation_error,rotation_error` per frame.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(["timestamp", "translation_error", "rotation_error"]).map_err(fmt)?;
        for f in &self.frames {
            out.write_record([f.timestamp.to_string(), f.translation.to_string(), f.rotation.to_string()])
                .map_err(fmt)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frames                 {}", self.frames.len())?;
        writeln!(f, "translation median     {:.6} m", self.median_translation)?;
        writeln!(f, "translation p95        {:.6} m", self.p95_translation)?;
        writeln!(f, "translation max        {:.6} m", self.max_translation)?;
        writeln!(f, "rotation median        {:.6} rad ({:.3} deg)", self.median_rotation, self.median_rotation.to_degrees())?;
        writeln!(f, "rotation p95           {:.6} rad ({:.3} deg)", self.p95_rotation, self.p95_rotation.to_degrees())?;
        writeln!(f, "rotation max           {:.6} rad ({:.3} deg)", self.max_rotation, self.max_rotation.to_degrees())?;
        write!(f, "tracking loss          {:.4} (error > {} m)", self.loss_fraction, self.loss_threshold)
    }
}
