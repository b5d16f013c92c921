//! Bundled scenarios.
//!
//! All presets share the L-shaped object, a 128×96 camera, a background wall
//! at 1.6 m and a 10 s sequence at 30 Hz.

use nalgebra::{UnitQuaternion, Vector3};

use crate::geometry::{CameraIntrinsics, Pose, Twist, TriangleMesh};
use crate::observation::ObservationParams;

use super::{Scene, SceneObject, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Preset {
    /// Free sinusoidal motion, no control channel.
    A,
    /// Constant-twist motion with the exact control channel.
    B,
    /// `B` plus an unrecorded push at mid-sequence.
    C,
    /// `A` plus a plate covering half of the object for 2 s.
    Occlusion,
    /// Object at rest, no control channel.
    Static,
}

const FRAME_RATE: f64 = 30.0;
const DURATION: f64 = 10.0;
const WALL_DEPTH: f64 = 1.6;
const PLATE_DEPTH: f64 = 0.65;
const DISTURBANCE_START: f64 = 5.0;
const DISTURBANCE_FRAMES: f64 = 10.0;
const OCCLUSION: (f64, f64) = (3.0, 5.0);
const OCCLUSION_RAMP: f64 = 0.1;

impl Preset {
    /// Interval during which the true motion departs from the control
    /// channel.
    pub fn disturbance_window(self) -> Option<(f64, f64)> {
        (self == Preset::C).then_some((
            DISTURBANCE_START,
            DISTURBANCE_START + DISTURBANCE_FRAMES / FRAME_RATE,
        ))
    }

    /// Interval during which the plate fully covers half of the object. The
    /// plate slides in and out over a further 0.1 s on either side.
    pub fn occlusion_window(self) -> Option<(f64, f64)> {
        (self == Preset::Occlusion).then_some(OCCLUSION)
    }
}

/// Two bars joined in an L, 16 cm by 17 cm overall and 5 cm thick.
pub fn tracked_object() -> TriangleMesh {
    TriangleMesh::merge(&[
        TriangleMesh::cuboid(Vector3::new(0.16, 0.05, 0.05), Vector3::new(0.0, -0.035, 0.0)),
        TriangleMesh::cuboid(Vector3::new(0.05, 0.12, 0.05), Vector3::new(-0.055, 0.05, 0.0)),
    ])
}

fn wall() -> SceneObject {
    SceneObject {
        mesh: TriangleMesh::rectangle(-2.0, 2.0, -2.0, 2.0),
        trajectory: Trajectory::Static {
            pose: Pose::from_translation(Vector3::new(0.0, 0.0, WALL_DEPTH)),
        },
    }
}

fn base_pose() -> Pose {
    Pose::new(
        Vector3::new(0.0, 0.0, 0.9),
        UnitQuaternion::from_euler_angles(0.35, -0.45, 0.2),
    )
}

fn sinusoid(center: Vector3<f64>) -> Trajectory {
    // peak speed ≤ 2π·0.1·|A|: 4.4 cm/s and 25°/s
    Trajectory::Sinusoid {
        base: base_pose(),
        translation_amplitude: [0.05, 0.04, 0.03],
        rotation_amplitude: [0.4, 0.5, 0.3],
        frequency: 0.1,
        phase: [0.0, 1.0, 2.0, 0.5, 1.5, 2.5],
        center: center.into(),
    }
}

fn constant_twist(center: Vector3<f64>) -> Trajectory {
    Trajectory::ConstantTwist {
        start: Pose::new(Vector3::new(-0.12, -0.03, 0.9), base_pose().rotation),
        twist: Twist::new(Vector3::new(0.03, 0.008, 0.0), Vector3::new(0.0, 0.1, 0.05)),
        center: center.into(),
    }
}

/// A plate whose right edge follows the ray through the object's centroid,
/// so it hides roughly the left half of the object while in place.
fn plate(object: &Trajectory, centroid: Vector3<f64>) -> SceneObject {
    let (on, off) = OCCLUSION;
    let edge = |t: f64| {
        let c = object.pose_at(t).expect("preset trajectory").transform_point(&centroid);
        c.x * PLATE_DEPTH / c.z
    };
    let at = |x: f64| Pose::from_translation(Vector3::new(x, 0.0, PLATE_DEPTH));
    let clear = 0.2;
    let mut times = vec![on - OCCLUSION_RAMP];
    let mut poses = vec![at(edge(on) - clear)];
    let steps = ((off - on) / 0.1).round() as usize;
    for k in 0..=steps {
        let t = on + (off - on) * k as f64 / steps as f64;
        times.push(t);
        poses.push(at(edge(t)));
    }
    times.push(off + OCCLUSION_RAMP);
    poses.push(at(edge(off) - clear));
    SceneObject {
        mesh: TriangleMesh::rectangle(-0.6, 0.0, -0.5, 0.5),
        trajectory: Trajectory::Waypoints { times, poses },
    }
}

pub fn preset(kind: Preset, seed: u64) -> Scene {
    let mesh = tracked_object();
    let c = mesh.centroid();
    let (trajectory, controls) = match kind {
        Preset::A | Preset::Occlusion => (sinusoid(c), false),
        Preset::B => (constant_twist(c), true),
        Preset::C => {
            let base = constant_twist(c);
            let (start, end) = kind.disturbance_window().unwrap();
            let pivot = base.pose_at(start).unwrap().transform_point(&c);
            (
                Trajectory::Disturbed {
                    base: Box::new(base),
                    start,
                    duration: end - start,
                    translation: [0.02, 0.0, 0.0],
                    rotation: [0.0, 5f64.to_radians(), 0.0],
                    pivot: pivot.into(),
                },
                true,
            )
        }
        Preset::Static => (Trajectory::Static { pose: base_pose() }, false),
    };
    let mut occluders = vec![wall()];
    if kind == Preset::Occlusion {
        occluders.push(plate(&trajectory, c));
    }
    Scene {
        tracked: SceneObject { mesh, trajectory },
        occluders,
        camera: CameraIntrinsics::default(),
        frame_rate: FRAME_RATE,
        duration: DURATION,
        observation: ObservationParams::default(),
        seed,
        controls,
    }
}
