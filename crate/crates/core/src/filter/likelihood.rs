//! Per-particle marginal likelihood and occlusion-belief update.
//!
//! Pixel contributions:
//! - ray hits the model at depth `d` and `z` is valid: log of the two-branch
//!   mixture under the propagated visibility prior;
//! - ray misses the model and `z` is valid: `-ln m`;
//! - `z` invalid: zero.
//!
//! Hits beyond the sensor range are treated as misses.

use crate::geometry::{for_each_hit, CameraIntrinsics, DepthImage, Pose, TriangleMesh};
use crate::observation::{BeamModel, ObservationParams};
use crate::occlusion::{posterior_visibility, OcclusionParams, Transition};
use crate::{Error, Result};

use super::Particle;

/// A depth image prepared for repeated evaluation: invalid readings are
/// normalized to NaN and counted once.
#[derive(Clone, Debug)]
pub struct Frame {
    z: Vec<f64>,
    valid_count: usize,
    pub timestamp: f64,
}

impl Frame {
    pub fn new(image: &DepthImage, cam: &CameraIntrinsics, obs: &ObservationParams) -> Result<Self> {
        if !image.matches(cam) || image.depths.len() != cam.pixel_count() {
            return Err(Error::DimensionMismatch(format!(
                "image is {}x{} but camera is {}x{}",
                image.width, image.height, cam.width, cam.height
            )));
        }
        let z: Vec<f64> = (0..image.len())
            .map(|i| image.valid_depth(i, obs.m).unwrap_or(f64::NAN))
            .collect();
        let valid_count = z.iter().filter(|v| !v.is_nan()).count();
        Ok(Self {
            z,
            valid_count,
            timestamp: image.timestamp,
        })
    }

    #[inline]
    pub fn depth(&self, pixel: usize) -> Option<f64> {
        let z = self.z[pixel];
        (!z.is_nan()).then_some(z)
    }

    pub fn valid_count(&self) -> usize {
        self.valid_count
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Result of scoring one particle against one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Evaluation {
    pub log_likelihood: f64,
    /// Model pixels with a valid measurement.
    pub informative: usize,
    /// Model pixels within sensor range.
    pub silhouette: usize,
    /// Sum of the updated visibility over model pixels.
    pub p_vis_sum: f64,
}

impl Evaluation {
    /// Mean updated visibility over model pixels, if any.
    pub fn mean_p_vis(&self) -> Option<f64> {
        (self.silhouette > 0).then(|| self.p_vis_sum / self.silhouette as f64)
    }
}

#[allow(clippy::too_many_arguments)]
fn scan(
    pose: &Pose,
    p_vis: &[f32],
    frame: &Frame,
    transition: &Transition,
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    obs: &ObservationParams,
    mut record: impl FnMut(usize, f64),
) -> Evaluation {
    let mut eval = Evaluation::default();
    let mut sum = 0.0;
    for_each_hit(mesh, pose, cam, |pixel, d| {
        if d > obs.m {
            return;
        }
        eval.silhouette += 1;
        let prior = transition.apply(p_vis[pixel] as f64);
        let post = match frame.depth(pixel) {
            Some(z) => {
                eval.informative += 1;
                let beam = BeamModel::new(d, obs);
                let (lv, lo) = (beam.visible(z), beam.occluded(z));
                let marginal = prior * lv + (1.0 - prior) * lo;
                sum += marginal.max(f64::MIN_POSITIVE).ln();
                posterior_visibility(prior, lv, lo)
            }
            None => prior,
        };
        eval.p_vis_sum += post;
        record(pixel, post);
    });
    let background = (frame.valid_count - eval.informative) as f64;
    eval.log_likelihood = sum - background * obs.m.ln();
    eval
}

/// Log of the occlusion-marginalized likelihood of `frame` for the particle's
/// pose, with its belief taken as the posterior `dt` seconds earlier.
pub fn log_likelihood(
    particle: &Particle,
    frame: &Frame,
    dt: f64,
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    obs: &ObservationParams,
    occ: &OcclusionParams,
) -> f64 {
    let t = occ.transition(dt);
    scan(&particle.pose, &particle.occlusion.p_vis, frame, &t, mesh, cam, obs, |_, _| {})
        .log_likelihood
}

/// Scores the particle and advances its belief by `dt`: every pixel is
/// propagated through the chain, and model pixels with a valid measurement
/// are then conditioned on it.
pub fn evaluate(
    particle: &mut Particle,
    frame: &Frame,
    dt: f64,
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    obs: &ObservationParams,
    occ: &OcclusionParams,
) -> Evaluation {
    let t = occ.transition(dt);
    let mut updates: Vec<(u32, f32)> = Vec::with_capacity(512);
    let eval = scan(&particle.pose, &particle.occlusion.p_vis, frame, &t, mesh, cam, obs, |px, p| {
        updates.push((px as u32, p as f32))
    });
    for p in particle.occlusion.p_vis.iter_mut() {
        *p = t.apply(*p as f64) as f32;
    }
    for (px, p) in updates {
        particle.occlusion.p_vis[px as usize] = p;
    }
    eval
}

/// Belief update alone; see [`evaluate`].
pub fn update_particle_occlusions(
    particle: &mut Particle,
    frame: &Frame,
    dt: f64,
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    obs: &ObservationParams,
    occ: &OcclusionParams,
) {
    evaluate(particle, frame, dt, mesh, cam, obs, occ);
}
