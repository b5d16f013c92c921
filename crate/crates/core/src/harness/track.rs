//! Running a tracker over a recorded sequence.

use std::io::Write;

use crate::filter::{Diagnostics, InitialPrior, Tracker};
use crate::geometry::{Pose, Twist};
use crate::process::ProcessMode;
use crate::{Error, Result};

use super::dataset::Dataset;
use super::record::TrajectoryRecord;

/// Frame spacing assumed for the first step of a single-frame sequence.
pub const DEFAULT_DT: f64 = 1.0 / 30.0;

#[derive(Clone, Debug, Default)]
pub struct TrackRun {
    pub estimates: TrajectoryRecord,
    /// One entry per frame, aligned with `estimates`.
    pub diagnostics: Vec<Diagnostics>,
}

/// Initial pose taken from the first frame's ground truth.
pub fn initial_pose_from_truth(dataset: &Dataset) -> Result<Pose> {
    dataset
        .frames
        .first()
        .ok_or_else(|| Error::Format("dataset has no frames".into()))?
        .pose
        .ok_or_else(|| Error::Config("dataset has no ground-truth poses; pass an initial pose".into()))
}

/// Tracks every frame of `dataset` from a prior centred on `initial`.
///
/// The set is initialised at the first timestamp and immediately stepped on
/// the first frame with the following frame spacing and no control, so every
/// frame yields exactly one estimate. Recorded twists are used only in
/// controlled mode.
pub fn track_dataset(tracker: &Tracker, dataset: &Dataset, initial: Pose) -> Result<TrackRun> {
    dataset.validate()?;
    if dataset.camera != *tracker.camera() {
        return Err(Error::DimensionMismatch(format!(
            "dataset intrinsics {:?} differ from configured camera {:?}",
            dataset.camera,
            tracker.camera()
        )));
    }
    let Some(first) = dataset.frames.first() else {
        return Ok(TrackRun::default());
    };
    let params = tracker.filter();
    let prior = InitialPrior {
        mean: initial,
        trans_sigma: params.prior_trans_sigma,
        rot_sigma: params.prior_rot_sigma,
    };
    let mut set = tracker.initialize(&prior, first.image.timestamp)?;
    let controlled = tracker.process().mode == ProcessMode::Controlled;
    let mut run = TrackRun::default();
    let zero = Twist::zero();
    for (k, frame) in dataset.frames.iter().enumerate() {
        let (dt, control) = if k == 0 {
            let dt = dataset
                .frames
                .get(1)
                .map_or(DEFAULT_DT, |next| next.image.timestamp - first.image.timestamp);
            (dt, Some(&zero))
        } else {
            (frame.image.timestamp - dataset.frames[k - 1].image.timestamp, frame.control.as_ref())
        };
        let out = tracker.step(set, &frame.image, if controlled { control } else { None }, dt)?;
        run.estimates.push(frame.image.timestamp, out.estimate);
        run.diagnostics.push(out.diagnostics);
        set = out.set;
    }
    Ok(run)
}

impl TrackRun {
    /// `timestamp,log_evidence,ess,mean_p_vis,tracking_lost,resampled`.
    pub fn write_diagnostics<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(["timestamp", "log_evidence", "ess", "mean_p_vis", "tracking_lost", "resampled"])
            .map_err(fmt)?;
        for ((t, _), d) in self.estimates.rows.iter().zip(&self.diagnostics) {
            out.write_record([
                t.to_string(),
                d.log_evidence.to_string(),
                d.ess.to_string(),
                d.mean_p_vis.to_string(),
                (d.tracking_lost as u8).to_string(),
                (d.resampled as u8).to_string(),
            ])
            .map_err(fmt)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }
}
