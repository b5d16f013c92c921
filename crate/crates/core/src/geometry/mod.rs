//! Poses, pinhole camera, triangle meshes and ray casting.

mod bvh;
mod camera;
mod mesh;
pub mod pose;
pub mod render;

pub use bvh::Aabb;
pub use camera::{is_valid_depth, CameraIntrinsics, DepthImage};
pub use mesh::TriangleMesh;
pub use pose::{
    centered_perturbation, exp_twist, geodesic_angle, log_twist, translation_distance, Pose,
    Twist,
};
pub use render::{
    for_each_hit, ray_cast, ray_cast_brute_force, render_depth, render_depth_f64, silhouette,
};
