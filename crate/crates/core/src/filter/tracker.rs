use nalgebra::Vector3;
use rayon::prelude::*;

use crate::geometry::{silhouette, CameraIntrinsics, DepthImage, Pose, Twist, TriangleMesh};
use crate::observation::ObservationParams;
use crate::occlusion::{OcclusionBelief, OcclusionParams};
use crate::process::{perturb, sample_pose, ProcessParams};
use crate::rng::{stream, SHARED_SLOT};
use crate::{Error, Result};

use super::likelihood::{evaluate, Evaluation, Frame};
use super::resample::{effective_sample_size, normalize_log_weights, systematic_resample};
use super::{estimate_weighted, FilterParams, InitialPrior, Particle, ParticleSet};

/// Per-step summary of the weighted set before resampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// `ln p(z_t | z_{1:t-1})` estimated from the particle weights.
    pub log_evidence: f64,
    pub ess: f64,
    /// Weighted mean of each particle's visibility over its model pixels;
    /// NaN when no particle sees the model.
    pub mean_p_vis: f64,
    /// No particle had a valid measurement on the model.
    pub tracking_lost: bool,
    pub resampled: bool,
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub set: ParticleSet,
    pub estimate: Pose,
    pub diagnostics: Diagnostics,
}

/// Object model, sensor and filter parameters. Immutable while tracking.
#[derive(Clone, Debug)]
pub struct Tracker {
    mesh: TriangleMesh,
    centroid: Vector3<f64>,
    camera: CameraIntrinsics,
    observation: ObservationParams,
    occlusion: OcclusionParams,
    process: ProcessParams,
    filter: FilterParams,
}

impl Tracker {
    pub fn new(
        mesh: TriangleMesh,
        camera: CameraIntrinsics,
        observation: ObservationParams,
        occlusion: OcclusionParams,
        process: ProcessParams,
        filter: FilterParams,
    ) -> Result<Self> {
        camera.validate()?;
        observation.validate()?;
        occlusion.validate()?;
        process.validate()?;
        filter.validate()?;
        if camera.max_range != observation.m {
            return Err(Error::InvalidParameter(format!(
                "camera max_range {} differs from observation m {}",
                camera.max_range, observation.m
            )));
        }
        if mesh.triangles().is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        Ok(Self {
            centroid: mesh.centroid(),
            mesh,
            camera,
            observation,
            occlusion,
            process,
            filter,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn camera(&self) -> &CameraIntrinsics {
        &self.camera
    }

    pub fn observation(&self) -> &ObservationParams {
        &self.observation
    }

    pub fn occlusion(&self) -> &OcclusionParams {
        &self.occlusion
    }

    pub fn process(&self) -> &ProcessParams {
        &self.process
    }

    pub fn filter(&self) -> &FilterParams {
        &self.filter
    }

    /// Samples the initial particle set around `prior.mean`. Fails if the
    /// object would cover no pixel at the mean pose.
    pub fn initialize(&self, prior: &InitialPrior, timestamp: f64) -> Result<ParticleSet> {
        if !prior.mean.is_finite() {
            return Err(Error::InvalidParameter("initial pose is not finite".into()));
        }
        if silhouette(&self.mesh, &prior.mean, &self.camera).is_empty() {
            return Err(Error::Untrackable(
                "object covers no pixel at the initial pose".into(),
            ));
        }
        let belief = OcclusionBelief::uniform(self.camera.pixel_count(), self.occlusion.initial_p_vis);
        let particles = (0..self.filter.particles)
            .map(|i| {
                let mut rng = stream(self.filter.seed, 0, i as u32);
                Particle {
                    pose: perturb(
                        &prior.mean,
                        1.0,
                        prior.trans_sigma,
                        prior.rot_sigma,
                        &self.centroid,
                        &mut rng,
                    ),
                    occlusion: belief.clone(),
                    log_weight: 0.0,
                }
            })
            .collect();
        Ok(ParticleSet {
            particles,
            frame: 0,
            timestamp,
        })
    }

    /// One filter iteration: propagate every particle, weight it by the
    /// occlusion-marginalized likelihood of `image` while updating its
    /// visibility belief, estimate, then resample.
    pub fn step(
        &self,
        mut set: ParticleSet,
        image: &DepthImage,
        control: Option<&Twist>,
        dt: f64,
    ) -> Result<StepOutput> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt {} must be > 0", dt)));
        }
        if set.is_empty() {
            return Err(Error::InvalidParameter("empty particle set".into()));
        }
        if let Some(u) = control {
            if !u.is_finite() {
                return Err(Error::InvalidParameter("control twist is not finite".into()));
            }
        }
        let frame = Frame::new(image, &self.camera, &self.observation)?;
        let index = set.frame + 1;
        let prev_logs: Vec<f64> = set.particles.iter().map(|p| p.log_weight).collect();

        let advance = |(slot, particle): (usize, &mut Particle)| -> Evaluation {
            let mut rng = stream(self.filter.seed, index, slot as u32);
            particle.pose = sample_pose(&particle.pose, control, dt, &self.centroid, &self.process, &mut rng);
            let eval = evaluate(
                particle,
                &frame,
                dt,
                &self.mesh,
                &self.camera,
                &self.observation,
                &self.occlusion,
            );
            particle.log_weight += eval.log_likelihood;
            eval
        };
        let evals: Vec<Evaluation> = if self.filter.parallel {
            set.particles.par_iter_mut().enumerate().map(advance).collect()
        } else {
            set.particles.iter_mut().enumerate().map(advance).collect()
        };

        let tracking_lost = evals.iter().all(|e| e.informative == 0)
            || !evals.iter().all(|e| e.log_likelihood.is_finite());
        let logs: Vec<f64> = set.particles.iter().map(|p| p.log_weight).collect();
        let weights = match normalize_log_weights(&logs) {
            Ok(w) if w.iter().all(|v| v.is_finite()) => w,
            _ => vec![1.0 / set.len() as f64; set.len()],
        };
        let log_evidence = log_sum_exp(&logs) - log_sum_exp(&prev_logs);
        let ess = effective_sample_size(&weights);
        let estimate = estimate_weighted(&set.particles, &weights, self.filter.estimator);
        let mean_p_vis = {
            let (mut num, mut den) = (0.0, 0.0);
            for (e, w) in evals.iter().zip(&weights) {
                if let Some(p) = e.mean_p_vis() {
                    num += w * p;
                    den += w;
                }
            }
            if den > 0.0 { num / den } else { f64::NAN }
        };

        let n = self.filter.particles;
        let resampled = match self.filter.ess_threshold {
            None => true,
            Some(t) => ess < t * n as f64 || set.len() != n,
        };
        if resampled {
            let mut rng = stream(self.filter.seed, index, SHARED_SLOT);
            let picks = systematic_resample(&weights, n, &mut rng)?;
            set.particles = take_indices(set.particles, &picks);
            for p in &mut set.particles {
                p.log_weight = 0.0;
            }
        } else {
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (p, w) in set.particles.iter_mut().zip(&weights) {
                p.log_weight = if max.is_finite() { p.log_weight - max } else { w.ln() };
            }
        }
        set.frame = index;
        set.timestamp = image.timestamp;
        Ok(StepOutput {
            set,
            estimate,
            diagnostics: Diagnostics {
                log_evidence,
                ess,
                mean_p_vis,
                tracking_lost,
                resampled,
            },
        })
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Gathers `items[picks[k]]` for every `k`; an item's last use moves it, the
/// others clone it. `picks` must be sorted, as systematic resampling yields.
fn take_indices<T: Clone>(items: Vec<T>, picks: &[usize]) -> Vec<T> {
    debug_assert!(picks.windows(2).all(|w| w[0] <= w[1]));
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(picks.len());
    for (k, &j) in picks.iter().enumerate() {
        let last_use = picks.get(k + 1) != Some(&j);
        let item = if last_use {
            slots[j].take().expect("ancestor already moved")
        } else {
            slots[j].clone().expect("ancestor already moved")
        };
        out.push(item);
    }
    out
}
