//! Pose process models.
//!
//! Both models perturb the pose in the object frame, with rotations about the
//! object centroid. Noise variances grow linearly with the time step, so
//! results do not depend on the frame rate.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{centered_perturbation, exp_twist, Pose, Twist};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ProcessMode {
    /// Object moved by an unobserved agent: Gaussian random walk.
    #[default]
    RandomWalk,
    /// Object moved by the robot: integrate the commanded twist.
    Controlled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessParams {
    /// Random-walk translation noise, m/√s per axis.
    pub trans_sigma: f64,
    /// Random-walk rotation noise, rad/√s per axis.
    pub rot_sigma: f64,
    /// Twist-integration translation noise, m/√s per axis.
    pub trans_sigma_ctrl: f64,
    /// Twist-integration rotation noise, rad/√s per axis.
    pub rot_sigma_ctrl: f64,
    pub mode: ProcessMode,
}

impl Default for ProcessParams {
    fn default() -> Self {
        Self {
            trans_sigma: 0.02,
            rot_sigma: 0.2,
            trans_sigma_ctrl: 0.005,
            rot_sigma_ctrl: 0.05,
            mode: ProcessMode::RandomWalk,
        }
    }
}

impl ProcessParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ![self.trans_sigma, self.rot_sigma, self.trans_sigma_ctrl, self.rot_sigma_ctrl]
            .into_iter()
            .all(ok)
        {
            return Err(Error::InvalidParameter("process: sigmas must be >= 0".into()));
        }
        Ok(())
    }
}

pub(crate) fn gaussian3<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vector3<f64> {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vector3::new(x, y, z) * sigma
}

/// Pose after `dt` seconds of a Gaussian random walk: a translation with
/// per-axis variance `trans_sigma²·dt` and a rotation whose axis-angle vector
/// has per-axis variance `rot_sigma²·dt`, applied about `centroid`.
pub fn sample_random_walk<R: Rng + ?Sized>(
    pose: &Pose,
    dt: f64,
    centroid: &Vector3<f64>,
    params: &ProcessParams,
    rng: &mut R,
) -> Pose {
    perturb(pose, dt, params.trans_sigma, params.rot_sigma, centroid, rng)
}

pub(crate) fn perturb<R: Rng + ?Sized>(
    pose: &Pose,
    dt: f64,
    trans_sigma: f64,
    rot_sigma: f64,
    centroid: &Vector3<f64>,
    rng: &mut R,
) -> Pose {
    if trans_sigma == 0.0 && rot_sigma == 0.0 {
        return *pose;
    }
    let scale = dt.sqrt();
    let delta = gaussian3(rng, trans_sigma * scale);
    let rotation = gaussian3(rng, rot_sigma * scale);
    pose.compose(&centered_perturbation(&rotation, &delta, centroid))
}

/// Pose after integrating the commanded twist `u` for `dt` seconds, with
/// Gaussian velocity noise of per-component standard deviation
/// `sigma_ctrl / √dt` (so displacement noise grows as `√dt`).
pub fn sample_controlled<R: Rng + ?Sized>(
    pose: &Pose,
    u: &Twist,
    dt: f64,
    centroid: &Vector3<f64>,
    params: &ProcessParams,
    rng: &mut R,
) -> Pose {
    let mut twist = *u;
    if params.trans_sigma_ctrl > 0.0 || params.rot_sigma_ctrl > 0.0 {
        let inv = 1.0 / dt.sqrt();
        twist.linear += gaussian3(rng, params.trans_sigma_ctrl * inv);
        twist.angular += gaussian3(rng, params.rot_sigma_ctrl * inv);
    }
    pose.compose(&exp_twist(&twist, dt, centroid))
}

/// Draws the next pose with the model selected by `params.mode`. Without a
/// control input the random walk is used in either mode.
pub fn sample_pose<R: Rng + ?Sized>(
    pose: &Pose,
    u: Option<&Twist>,
    dt: f64,
    centroid: &Vector3<f64>,
    params: &ProcessParams,
    rng: &mut R,
) -> Pose {
    match (params.mode, u) {
        (ProcessMode::Controlled, Some(u)) => sample_controlled(pose, u, dt, centroid, params, rng),
        _ => sample_random_walk(pose, dt, centroid, params, rng),
    }
}
