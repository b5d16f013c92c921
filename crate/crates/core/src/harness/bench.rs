//! Filter throughput measurement.

use std::fmt;
use std::time::Instant;

use crate::filter::{FilterParams, InitialPrior, Tracker};
use crate::geometry::CameraIntrinsics;
use crate::{Error, Result};

use super::config::RunConfig;
use super::dataset::Dataset;
use super::metrics::median;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchOptions {
    pub particles: usize,
    /// Discarded steps before timing starts.
    pub warmup: usize,
    /// Timed steps; the median step time is reported.
    pub frames: usize,
    /// Run the particle loop on the rayon pool.
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            particles: 200,
            warmup: 30,
            frames: 300,
            parallel: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchResult {
    pub particles: usize,
    pub pixels: usize,
    pub parallel: bool,
    pub threads: usize,
    pub frames: usize,
    /// Median wall-clock seconds per filter step.
    pub median_step: f64,
}

impl BenchResult {
    pub fn steps_per_second(&self) -> f64 {
        1.0 / self.median_step
    }

    /// Every particle scores every pixel once per step.
    pub fn evaluations_per_second(&self) -> f64 {
        (self.particles * self.pixels) as f64 / self.median_step
    }
}

impl fmt::Display for BenchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<8} threads={:<3} N={:<5} I={:<6} median step {:.3} ms  {:.1} steps/s  {:.3e} particle-pixel evals/s",
            if self.parallel { "parallel" } else { "serial" },
            self.threads,
            self.particles,
            self.pixels,
            self.median_step * 1e3,
            self.steps_per_second(),
            self.evaluations_per_second()
        )
    }
}

/// Steps a tracker through `source` repeatedly, starting from each frame's
/// ground truth whenever the sequence wraps, and times every step after the
/// warm-up. Initialisation is not timed.
pub fn bench(config: &RunConfig, mesh: &crate::geometry::TriangleMesh, source: &Dataset, opts: &BenchOptions) -> Result<BenchResult> {
    if opts.frames == 0 || source.frames.len() < 2 {
        return Err(Error::InvalidParameter("benchmark needs frames to time and a source of ≥ 2 frames".into()));
    }
    let filter = FilterParams {
        particles: opts.particles,
        parallel: opts.parallel,
        ..config.filter
    };
    let tracker = Tracker::new(
        mesh.clone(),
        source.camera,
        config.observation,
        config.occlusion,
        config.process,
        filter,
    )?;
    let start = |k: usize| -> Result<_> {
        let f = &source.frames[k];
        let mean = f
            .pose
            .ok_or_else(|| Error::InvalidParameter("benchmark source needs ground-truth poses".into()))?;
        tracker.initialize(
            &InitialPrior {
                mean,
                trans_sigma: filter.prior_trans_sigma,
                rot_sigma: filter.prior_rot_sigma,
            },
            f.image.timestamp,
        )
    };
    let dt = source.frames[1].image.timestamp - source.frames[0].image.timestamp;
    let mut set = start(0)?;
    let mut k = 0;
    let mut times = Vec::with_capacity(opts.frames);
    for i in 0..opts.warmup + opts.frames {
        k += 1;
        if k == source.frames.len() {
            k = 1;
            set = start(0)?;
        }
        let frame = &source.frames[k];
        let t0 = Instant::now();
        let out = tracker.step(set, &frame.image, frame.control.as_ref(), dt)?;
        let elapsed = t0.elapsed().as_secs_f64();
        set = out.set;
        if i >= opts.warmup {
            times.push(elapsed);
        }
    }
    Ok(BenchResult {
        particles: opts.particles,
        pixels: source.camera.pixel_count(),
        parallel: opts.parallel,
        threads: if opts.parallel { rayon::current_num_threads() } else { 1 },
        frames: opts.frames,
        median_step: median(&times),
    })
}

/// The same field of view sampled with `factor` times as many columns.
pub fn widen(camera: &CameraIntrinsics, factor: u32) -> CameraIntrinsics {
    let f = factor as f64;
    CameraIntrinsics {
        width: camera.width * factor,
        fx: camera.fx * f,
        cx: (camera.cx + 0.5) * f - 0.5,
        ..*camera
    }
}
