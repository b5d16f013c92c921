use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{centered_perturbation, exp_twist, Pose, Twist};
use crate::{Error, Result};

/// Scripted object motion, continuous in `t ≥ 0`. Rotations act about
/// `center`, given in the object frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    Static {
        pose: Pose,
    },
    /// `start ∘ exp(twist·t)`.
    ConstantTwist {
        start: Pose,
        twist: Twist,
        #[serde(default)]
        center: [f64; 3],
    },
    /// `base ∘ perturbation(t)` with every translation and rotation-vector
    /// component `A·sin(2π f t + φ)`.
    Sinusoid {
        base: Pose,
        translation_amplitude: [f64; 3],
        rotation_amplitude: [f64; 3],
        frequency: f64,
        /// Phases of the three translation then three rotation components.
        #[serde(default)]
        phase: [f64; 6],
        #[serde(default)]
        center: [f64; 3],
    },
    /// Piecewise linear translation and spherical-linear rotation between
    /// timed keyframes; constant outside them.
    Waypoints {
        times: Vec<f64>,
        poses: Vec<Pose>,
    },
    /// `D(s) ∘ base(t)`, where `D` is a camera-frame displacement about
    /// `pivot` that ramps linearly from identity to its full size over
    /// `[start, start + duration]` and stays there.
    Disturbed {
        base: Box<Trajectory>,
        start: f64,
        duration: f64,
        translation: [f64; 3],
        rotation: [f64; 3],
        pivot: [f64; 3],
    },
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("trajectory: {}", msg)));
        match self {
            Trajectory::Static { pose } => {
                if !pose.is_finite() {
                    return bad("pose not finite");
                }
            }
            Trajectory::ConstantTwist { start, twist, center } => {
                if !start.is_finite() || !twist.is_finite() || !center.iter().all(|v| v.is_finite()) {
                    return bad("non-finite constant twist");
                }
            }
            Trajectory::Sinusoid { base, translation_amplitude, rotation_amplitude, frequency, phase, center } => {
                let finite = translation_amplitude
                    .iter()
                    .chain(rotation_amplitude)
                    .chain(phase)
                    .chain(center)
                    .all(|v| v.is_finite());
                if !base.is_finite() || !finite || !(frequency.is_finite() && *frequency >= 0.0) {
                    return bad("invalid sinusoid");
                }
            }
            Trajectory::Waypoints { times, poses } => {
                if times.is_empty() || times.len() != poses.len() {
                    return bad("waypoints need matching, nonempty times and poses");
                }
                if !times.windows(2).all(|w| w[0] < w[1]) || !times.iter().all(|t| t.is_finite()) {
                    return bad("waypoint times must increase");
                }
                if !poses.iter().all(Pose::is_finite) {
                    return bad("waypoint pose not finite");
                }
            }
            Trajectory::Disturbed { base, start, duration, translation, rotation, pivot } => {
                base.validate()?;
                if !(start.is_finite() && duration.is_finite() && *duration > 0.0)
                    || !translation.iter().chain(rotation).chain(pivot).all(|v| v.is_finite())
                {
                    return bad("invalid disturbance");
                }
            }
        }
        Ok(())
    }

    /// Object pose at time `t`. Fails for negative or non-finite `t`.
    pub fn pose_at(&self, t: f64) -> Result<Pose> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::TimeOutOfRange(t));
        }
        Ok(match self {
            Trajectory::Static { pose } => *pose,
            Trajectory::ConstantTwist { start, twist, center } => {
                start.compose(&exp_twist(twist, t, &Vector3::from(*center)))
            }
            Trajectory::Sinusoid { base, translation_amplitude, rotation_amplitude, frequency, phase, center } => {
                let w = TAU * frequency * t;
                let delta = Vector3::from_fn(|i, _| translation_amplitude[i] * (w + phase[i]).sin());
                let rot = Vector3::from_fn(|i, _| rotation_amplitude[i] * (w + phase[i + 3]).sin());
                base.compose(&centered_perturbation(&rot, &delta, &Vector3::from(*center)))
            }
            Trajectory::Waypoints { times, poses } => interpolate(times, poses, t),
            Trajectory::Disturbed { base, start, duration, translation, rotation, pivot } => {
                let s = ((t - start) / duration).clamp(0.0, 1.0);
                let d = centered_perturbation(
                    &(Vector3::from(*rotation) * s),
                    &(Vector3::from(*translation) * s),
                    &Vector3::from(*pivot),
                );
                d.compose(&base.pose_at(t)?)
            }
        })
    }

    /// The motion a controller believes it is executing: the trajectory with
    /// any disturbance removed.
    pub fn commanded(&self) -> &Trajectory {
        match self {
            Trajectory::Disturbed { base, .. } => base.commanded(),
            other => other,
        }
    }
}

fn interpolate(times: &[f64], poses: &[Pose], t: f64) -> Pose {
    let last = times.len() - 1;
    if t <= times[0] {
        return poses[0];
    }
    if t >= times[last] {
        return poses[last];
    }
    let k = times.partition_point(|&x| x <= t) - 1;
    let s = (t - times[k]) / (times[k + 1] - times[k]);
    let (a, b) = (&poses[k], &poses[k + 1]);
    let rotation = a
        .rotation
        .try_slerp(&b.rotation, s, 1e-12)
        .unwrap_or(if s < 0.5 { a.rotation } else { b.rotation });
    Pose::new(a.translation.lerp(&b.translation, s), rotation)
}
