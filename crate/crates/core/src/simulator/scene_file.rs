//! TOML scene descriptions.
//!
//! ```toml
//! frame_rate = 30.0
//! duration = 4.0
//! seed = 3
//! controls = false
//!
//! [camera]            # optional, defaults to 128x96
//! [observation]       # optional
//!
//! [tracked]
//! mesh = { kind = "obj", path = "object.obj" }
//! trajectory = { kind = "static", pose = [0.0, 0.0, 0.9, 1.0, 0.0, 0.0, 0.0] }
//!
//! [[occluders]]
//! mesh = { kind = "rectangle", x = [-2.0, 2.0], y = [-2.0, 2.0] }
//! trajectory = { kind = "static", pose = [0.0, 0.0, 1.6, 1.0, 0.0, 0.0, 0.0] }
//! ```
//!
//! Relative mesh paths resolve against the scene file's directory.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraIntrinsics, TriangleMesh};
use crate::observation::ObservationParams;
use crate::{Error, Result};

use super::{tracked_object, Scene, SceneObject, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Obj { path: String },
    Cuboid { size: [f64; 3], #[serde(default)] center: [f64; 3] },
    /// Rectangle in the object's `z = 0` plane.
    Rectangle { x: [f64; 2], y: [f64; 2] },
    /// The L-shaped object used by the bundled presets.
    LShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub mesh: MeshSpec,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub frame_rate: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub controls: bool,
    #[serde(default)]
    pub camera: CameraIntrinsics,
    #[serde(default)]
    pub observation: ObservationParams,
    pub tracked: ObjectSpec,
    #[serde(default)]
    pub occluders: Vec<ObjectSpec>,
}

impl MeshSpec {
    pub fn build(&self, base_dir: &Path) -> Result<TriangleMesh> {
        Ok(match self {
            MeshSpec::Obj { path } => TriangleMesh::load_obj(&base_dir.join(path))?,
            MeshSpec::Cuboid { size, center } => {
                if !size.iter().all(|s| s.is_finite() && *s > 0.0) {
                    return Err(Error::Mesh("cuboid size must be positive".into()));
                }
                TriangleMesh::cuboid(Vector3::from(*size), Vector3::from(*center))
            }
            MeshSpec::Rectangle { x, y } => {
                if !(x[0] < x[1] && y[0] < y[1]) {
                    return Err(Error::Mesh("rectangle bounds must increase".into()));
                }
                TriangleMesh::rectangle(x[0], x[1], y[0], y[1])
            }
            MeshSpec::LShape => tracked_object(),
        })
    }
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds the scene; `seed` overrides the file's seed when given.
    pub fn build(&self, base_dir: &Path, seed: Option<u64>) -> Result<Scene> {
        let object = |o: &ObjectSpec| -> Result<SceneObject> {
            Ok(SceneObject {
                mesh: o.mesh.build(base_dir)?,
                trajectory: o.trajectory.clone(),
            })
        };
        let scene = Scene {
            tracked: object(&self.tracked)?,
            occluders: self.occluders.iter().map(object).collect::<Result<_>>()?,
            camera: self.camera,
            frame_rate: self.frame_rate,
            duration: self.duration,
            observation: self.observation,
            seed: seed.unwrap_or(self.seed),
            controls: self.controls,
        };
        scene.validate()?;
        Ok(scene)
    }
}

pub fn load_scene(path: &Path, seed: Option<u64>) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    SceneFile::parse(&text)?.build(dir, seed)
}
