//! Rigid transforms, twists and the SE(3) exponential used by the process
//! models.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rigid transform from the object frame to the camera frame.
///
/// Serialized as `[tx, ty, tz, qw, qx, qy, qz]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 7]", into = "[f64; 7]")]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            translation,
            rotation: renormalize(rotation),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(translation, UnitQuaternion::identity())
    }

    /// Builds a pose from `[tx, ty, tz, qw, qx, qy, qz]`. The quaternion is
    /// normalized; a zero or non-finite quaternion is rejected.
    pub fn from_array(a: [f64; 7]) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("pose has non-finite components".into()));
        }
        let q = Quaternion::new(a[3], a[4], a[5], a[6]);
        if q.norm() < 1e-12 {
            return Err(Error::InvalidParameter("pose quaternion has zero norm".into()));
        }
        Ok(Self {
            translation: Vector3::new(a[0], a[1], a[2]),
            rotation: UnitQuaternion::from_quaternion(q),
        })
    }

    pub fn to_array(&self) -> [f64; 7] {
        let q = self.rotation.quaternion();
        [
            self.translation.x,
            self.translation.y,
            self.translation.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.translation + self.rotation * other.translation,
            rotation: renormalize(self.rotation * other.rotation),
        }
    }

    pub fn inverse(&self) -> Pose {
        let rotation = renormalize(self.rotation.inverse());
        Pose {
            translation: -(rotation * self.translation),
            rotation,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl TryFrom<[f64; 7]> for Pose {
    type Error = Error;

    fn try_from(a: [f64; 7]) -> Result<Self> {
        Pose::from_array(a)
    }
}

impl From<Pose> for [f64; 7] {
    fn from(p: Pose) -> Self {
        p.to_array()
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// Object-frame velocity: linear part in m/s, angular part as an axis-angle
/// rate in rad/s. Serialized as `[vx, vy, vz, wx, wy, wz]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct Twist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl Twist {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.linear.x,
            self.linear.y,
            self.linear.z,
            self.angular.x,
            self.angular.y,
            self.angular.z,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl From<[f64; 6]> for Twist {
    fn from(a: [f64; 6]) -> Self {
        Twist::new(Vector3::new(a[0], a[1], a[2]), Vector3::new(a[3], a[4], a[5]))
    }
}

impl From<Twist> for [f64; 6] {
    fn from(t: Twist) -> Self {
        t.to_array()
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Left Jacobian of SO(3) at the rotation vector `phi`.
fn so3_left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let k = skew(phi);
    let (a, b) = if theta2 < 1e-10 {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        let theta = theta2.sqrt();
        (
            (1.0 - theta.cos()) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Exponential of a constant twist held for `dt` seconds, with the screw
/// expressed about `center` (object frame). The result is a displacement in
/// the object frame, to be right-composed onto a pose.
///
/// The map is a one-parameter subgroup in `dt`, so integrating in two halves
/// gives the same displacement as one full step.
pub fn exp_twist(xi: &Twist, dt: f64, center: &Vector3<f64>) -> Pose {
    let phi = xi.angular * dt;
    let rotation = UnitQuaternion::from_scaled_axis(phi);
    let screw = so3_left_jacobian(&phi) * (xi.linear * dt);
    Pose::new(center - rotation * center + screw, rotation)
}

/// Inverse of [`exp_twist`]: the constant twist that moves `from` to `to` in
/// `dt` seconds, with the screw about `center`. Requires a relative rotation
/// below π.
pub fn log_twist(from: &Pose, to: &Pose, dt: f64, center: &Vector3<f64>) -> Twist {
    let rel = from.inverse().compose(to);
    let phi = rel.rotation.scaled_axis();
    let offset = rel.translation - center + rel.rotation * center;
    let jac = so3_left_jacobian(&phi);
    let linear = jac
        .lu()
        .solve(&offset)
        .unwrap_or(offset);
    Twist::new(linear / dt, phi / dt)
}

/// Rotation-only displacement about `center` followed by a translation
/// `delta`: `x ↦ R(x − c) + c + δ`.
pub fn centered_perturbation(
    rotation_vector: &Vector3<f64>,
    delta: &Vector3<f64>,
    center: &Vector3<f64>,
) -> Pose {
    let rotation = UnitQuaternion::from_scaled_axis(*rotation_vector);
    Pose::new(center - rotation * center + delta, rotation)
}

/// Angle of the relative rotation between two poses, in `[0, π]`.
pub fn geodesic_angle(a: &Pose, b: &Pose) -> f64 {
    let q = a.rotation.inverse() * b.rotation;
    let q = q.quaternion();
    let v = Vector3::new(q.i, q.j, q.k).norm();
    (2.0 * v.atan2(q.w.abs())).min(std::f64::consts::PI)
}

/// Euclidean distance between the translations of two poses.
pub fn translation_distance(a: &Pose, b: &Pose) -> f64 {
    (a.translation - b.translation).norm()
}
