//! Rao-Blackwellised particle filter over object poses.
//!
//! Each particle carries a pose hypothesis and its own per-pixel visibility
//! belief. The belief is updated in closed form, so only the pose is sampled.

mod estimate;
mod likelihood;
mod resample;
mod tracker;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::occlusion::OcclusionBelief;
use crate::{Error, Result};

pub use estimate::{estimate, estimate_weighted};
pub use likelihood::{evaluate, log_likelihood, update_particle_occlusions, Evaluation, Frame};
pub use resample::{effective_sample_size, normalize_log_weights, systematic_resample};
pub use tracker::{Diagnostics, StepOutput, Tracker};

#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub pose: Pose,
    pub occlusion: OcclusionBelief,
    pub log_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<Particle>,
    /// Number of steps applied since initialization.
    pub frame: u32,
    pub timestamp: f64,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weights normalized to sum to one.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let logs: Vec<f64> = self.particles.iter().map(|p| p.log_weight).collect();
        normalize_log_weights(&logs)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Estimator {
    /// Weighted mean translation and weighted quaternion average.
    #[default]
    Mean,
    /// Pose of the highest-weight particle.
    MaxWeight,
}

/// Gaussian prior around a known starting pose, in the same tangent-space
/// convention as the random-walk process model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialPrior {
    pub mean: Pose,
    /// Per-axis translation standard deviation, meters.
    pub trans_sigma: f64,
    /// Per-axis rotation-vector standard deviation, radians.
    pub rot_sigma: f64,
}

/// Filter-level settings; the `[filter]` section of a run configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    pub particles: usize,
    pub seed: u64,
    /// Resample only when the effective sample size falls below this
    /// fraction of the particle count. `None` resamples every frame.
    pub ess_threshold: Option<f64>,
    pub estimator: Estimator,
    pub prior_trans_sigma: f64,
    pub prior_rot_sigma: f64,
    /// Evaluate particles on the rayon thread pool.
    pub parallel: bool,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            particles: 200,
            seed: 0,
            ess_threshold: None,
            estimator: Estimator::Mean,
            prior_trans_sigma: 0.005,
            prior_rot_sigma: 0.02,
            parallel: true,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::InvalidParameter("filter: particles must be >= 1".into()));
        }
        if let Some(t) = self.ess_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!(
                    "filter: ess_threshold {} outside [0, 1]",
                    t
                )));
            }
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.prior_trans_sigma) || !ok(self.prior_rot_sigma) {
            return Err(Error::InvalidParameter("filter: prior sigmas must be >= 0".into()));
        }
        Ok(())
    }
}
