//! Occlusion-aware 6-DoF object tracking in depth images.
//!
//! The tracker is a Rao-Blackwellised particle filter: poses are sampled,
//! while the per-pixel binary occlusion state attached to every particle is
//! marginalized in closed form. The crate also contains a depth-camera
//! simulator that draws measurements from the same beam model, the file
//! formats used by the `depthtrack` command-line tool, and evaluation
//! metrics.

pub mod error;
pub mod filter;
pub mod geometry;
pub mod harness;
pub mod observation;
pub mod occlusion;
pub mod process;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
