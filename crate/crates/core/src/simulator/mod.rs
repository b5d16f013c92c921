//! Synthetic depth sequences with ground truth.
//!
//! Each frame renders the noiseless scene depth as the per-pixel minimum over
//! all objects, then draws every valid pixel from the sensor noise model.
//! Occluders are real geometry; nothing here uses the tracker's occluder
//! prior.

mod presets;
mod scene_file;
mod trajectory;

use rayon::prelude::*;

use crate::geometry::{for_each_hit, log_twist, render_depth_f64, CameraIntrinsics, DepthImage, Pose, Twist, TriangleMesh};
use crate::harness::dataset::{Dataset, DatasetFrame};
use crate::observation::{sample_measurement, ObservationParams};
use crate::rng::{stream, SHARED_SLOT};
use crate::{Error, Result};

pub use presets::{preset, tracked_object, Preset};
pub use scene_file::{load_scene, MeshSpec, ObjectSpec, SceneFile};
pub use trajectory::Trajectory;

#[derive(Clone, Debug)]
pub struct SceneObject {
    pub mesh: TriangleMesh,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub tracked: SceneObject,
    /// Every other surface, including background walls.
    pub occluders: Vec<SceneObject>,
    pub camera: CameraIntrinsics,
    pub frame_rate: f64,
    pub duration: f64,
    pub observation: ObservationParams,
    pub seed: u64,
    /// Record the commanded object-frame twist for every frame.
    pub controls: bool,
}

/// Ground-truth pixel classification of the tracked object in one frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coverage {
    /// Pixels whose ray hits the tracked object.
    pub object: Vec<u32>,
    /// Subset of `object` where another surface is strictly nearer.
    pub occluded: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub frames: usize,
    pub duration: f64,
    /// Occluded share of tracked-object pixels over the whole sequence.
    pub occlusion_fraction: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        self.observation.validate()?;
        if self.camera.max_range != self.observation.m {
            return Err(Error::InvalidParameter(format!(
                "camera max_range {} differs from observation m {}",
                self.camera.max_range, self.observation.m
            )));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::InvalidParameter("frame_rate must be > 0".into()));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::InvalidParameter("duration must be >= 0".into()));
        }
        for obj in std::iter::once(&self.tracked).chain(&self.occluders) {
            obj.trajectory.validate()?;
        }
        Ok(())
    }

    /// Frames at `k / frame_rate` for every such time within the duration.
    pub fn frame_count(&self) -> usize {
        (self.duration * self.frame_rate + 1e-9).floor() as usize + 1
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 / self.frame_rate
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.duration + 1e-9).contains(&t) {
            return Err(Error::TimeOutOfRange(t));
        }
        Ok(())
    }

    /// Ground-truth pose of the tracked object at time `t`.
    pub fn pose_at(&self, t: f64) -> Result<Pose> {
        self.check_time(t)?;
        self.tracked.trajectory.pose_at(t)
    }

    fn posed(&self, t: f64) -> Result<Vec<(&TriangleMesh, Pose)>> {
        self.check_time(t)?;
        std::iter::once(&self.tracked)
            .chain(&self.occluders)
            .map(|o| Ok((&o.mesh, o.trajectory.pose_at(t)?)))
            .collect()
    }

    /// Noiseless scene depth at time `t`.
    pub fn render(&self, t: f64) -> Result<Vec<Option<f64>>> {
        Ok(render_depth_f64(&self.posed(t)?, &self.camera))
    }

    pub fn coverage(&self, t: f64) -> Result<Coverage> {
        let scene = self.posed(t)?;
        let others = render_depth_f64(&scene[1..], &self.camera);
        let mut cov = Coverage::default();
        for_each_hit(scene[0].0, &scene[0].1, &self.camera, |px, d| {
            cov.object.push(px as u32);
            if others[px].is_some_and(|o| o < d) {
                cov.occluded.push(px as u32);
            }
        });
        Ok(cov)
    }

    /// Twist that the commanded trajectory applies between frames `k - 1`
    /// and `k`, about the tracked mesh centroid; zero for the first frame.
    pub fn control(&self, k: usize) -> Result<Twist> {
        if k == 0 {
            return Ok(Twist::zero());
        }
        let cmd = self.tracked.trajectory.commanded();
        let (t0, t1) = (self.frame_time(k - 1), self.frame_time(k));
        let center = self.tracked.mesh.centroid();
        Ok(log_twist(&cmd.pose_at(t0)?, &cmd.pose_at(t1)?, t1 - t0, &center))
    }

    pub fn frame(&self, k: usize) -> Result<DatasetFrame> {
        let t = self.frame_time(k);
        let truth = self.render(t)?;
        let mut rng = stream(self.seed, k as u32, SHARED_SLOT);
        let depths = truth
            .iter()
            .map(|b| match b {
                Some(b) if *b <= self.observation.m => sample_measurement(*b, &self.observation, &mut rng) as f32,
                _ => f32::NAN,
            })
            .collect();
        Ok(DatasetFrame {
            image: DepthImage::new(self.camera.width, self.camera.height, depths, t)?,
            pose: Some(self.pose_at(t)?),
            control: if self.controls { Some(self.control(k)?) } else { None },
        })
    }

    pub fn summary(&self) -> Result<Summary> {
        let (mut object, mut occluded) = (0usize, 0usize);
        for k in 0..self.frame_count() {
            let c = self.coverage(self.frame_time(k))?;
            object += c.object.len();
            occluded += c.occluded.len();
        }
        Ok(Summary {
            frames: self.frame_count(),
            duration: self.duration,
            occlusion_fraction: if object > 0 { occluded as f64 / object as f64 } else { 0.0 },
        })
    }
}

/// Generates every frame of `scene`. Frames are independent given the seed,
/// so they are produced in parallel without affecting the output.
pub fn simulate(scene: &Scene) -> Result<Dataset> {
    scene.validate()?;
    let frames = (0..scene.frame_count())
        .into_par_iter()
        .map(|k| scene.frame(k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        camera: scene.camera,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use crate::geometry::{exp_twist, geodesic_angle, render_depth, translation_distance};
    use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

    fn small(p: Preset, seed: u64) -> Scene {
        let mut s = preset(p, seed);
        s.duration = 1.0;
        s
    }

    #[test]
    fn deterministic() {
        let a = simulate(&small(Preset::A, 7)).unwrap().encode().unwrap();
        let b = simulate(&small(Preset::A, 7)).unwrap().encode().unwrap();
        let c = simulate(&small(Preset::A, 8)).unwrap().encode().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_limit_equals_render() {
        let mut s = small(Preset::Occlusion, 1);
        s.observation = ObservationParams { beta: 0.0, k_c: 1e-300, sigma_m: 0.0, ..s.observation };
        let ds = simulate(&s).unwrap();
        for (k, f) in ds.frames.iter().enumerate() {
            let scene = s.posed(s.frame_time(k)).unwrap();
            let r = render_depth(&scene, &s.camera);
            assert!(f.image.depths.iter().map(|v| v.to_bits()).eq(r.depths.iter().map(|v| v.to_bits())));
        }
    }

    #[test]
    fn invalid_exactly_where_nothing_is_hit() {
        let mut s = small(Preset::A, 3);
        s.occluders.clear();
        let ds = simulate(&s).unwrap();
        for (k, f) in ds.frames.iter().enumerate() {
            let truth = s.render(s.frame_time(k)).unwrap();
            for (z, b) in f.image.depths.iter().zip(&truth) {
                assert_eq!(z.is_nan(), b.is_none());
            }
        }
    }

    #[test]
    fn occluder_sets_the_depth_of_covered_pixels() {
        let s = preset(Preset::Occlusion, 0);
        let t = 4.0;
        let cov = s.coverage(t).unwrap();
        let frac = cov.occluded.len() as f64 / cov.object.len() as f64;
        assert!((0.3..0.7).contains(&frac), "covered fraction {}", frac);
        let depth = s.render(t).unwrap();
        let plate = &s.occluders[1];
        let plate_only = render_depth_f64(&[(&plate.mesh, plate.trajectory.pose_at(t).unwrap())], &s.camera);
        for &px in &cov.occluded {
            assert_eq!(depth[px as usize], plate_only[px as usize]);
        }
    }

    #[test]
    fn controls_only_when_requested() {
        assert!(simulate(&small(Preset::B, 0)).unwrap().has_controls());
        assert!(!simulate(&small(Preset::A, 0)).unwrap().has_controls());
    }

    #[test]
    fn twist_channel_is_self_consistent() {
        for p in [Preset::B, Preset::C] {
            let s = preset(p, 0);
            let c = s.tracked.mesh.centroid();
            let dt = 1.0 / s.frame_rate;
            let window = p.disturbance_window();
            for k in 1..s.frame_count() {
                let (t0, t1) = (s.frame_time(k - 1), s.frame_time(k));
                if window.is_some_and(|(a, b)| t1 > a && t0 < b) {
                    continue;
                }
                let prev = s.pose_at(t0).unwrap();
                let next = prev.compose(&exp_twist(&s.control(k).unwrap(), dt, &c));
                let truth = s.pose_at(t1).unwrap();
                assert!(translation_distance(&next, &truth) < 1e-9, "frame {}", k);
                assert!(geodesic_angle(&next, &truth) < 1e-9, "frame {}", k);
            }
        }
    }

    #[test]
    fn residuals_match_noise_model() {
        // a fronto-parallel plate puts every pixel at b = 1 m exactly
        let plate = TriangleMesh::rectangle(-2.0, 2.0, -2.0, 2.0);
        let mut s = preset(Preset::Static, 5);
        s.tracked = SceneObject {
            mesh: plate,
            trajectory: Trajectory::Static { pose: Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)) },
        };
        s.occluders.clear();
        s.duration = 8.0 / s.frame_rate;
        let ds = simulate(&s).unwrap();
        let residuals: Vec<f64> = ds
            .frames
            .iter()
            .flat_map(|f| f.image.depths.iter().map(|&z| z as f64 - 1.0))
            .collect();
        assert!(residuals.len() >= 100_000);
        let obs = s.observation;
        let sigma = obs.k_c;
        let gauss = Normal::new(0.0, sigma).unwrap();
        let mass = gauss.cdf(obs.m - 1.0) - gauss.cdf(-1.0);
        let prob = |lo: f64, hi: f64| {
            let (lo, hi) = (lo.max(-1.0), hi.min(obs.m - 1.0));
            obs.beta * (hi - lo) / obs.m + (1.0 - obs.beta) * (gauss.cdf(hi) - gauss.cdf(lo)) / mass
        };
        let mut edges = vec![f64::NEG_INFINITY, -0.5];
        edges.extend((-8..=8).map(|k| k as f64 * 0.5 * sigma));
        edges.extend([0.5, 2.0, f64::INFINITY]);
        let n = residuals.len() as f64;
        let mut observed = vec![0usize; edges.len() - 1];
        for r in &residuals {
            observed[edges.partition_point(|e| e < r) - 1] += 1;
        }
        let stat: f64 = observed
            .iter()
            .zip(edges.windows(2))
            .map(|(&o, w)| {
                let e = n * prob(w[0], w[1]);
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let crit = ChiSquared::new((observed.len() - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "chi-square {} >= {}", stat, crit);
    }

    #[test]
    fn summary_counts_frames_and_occlusion() {
        let s = preset(Preset::Occlusion, 0);
        let sum = s.summary().unwrap();
        assert_eq!(sum.frames, 301);
        assert!(sum.occlusion_fraction > 0.05 && sum.occlusion_fraction < 0.2, "{}", sum.occlusion_fraction);
        assert_eq!(preset(Preset::A, 0).summary().unwrap().occlusion_fraction, 0.0);
    }

    #[test]
    fn out_of_range_time() {
        let s = preset(Preset::A, 0);
        assert!(matches!(s.pose_at(10.5), Err(Error::TimeOutOfRange(_))));
    }
}
