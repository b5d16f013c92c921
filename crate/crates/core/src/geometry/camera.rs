use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pinhole intrinsics. Pixel `(col, row)` has its center at integer image
/// coordinates, so its viewing ray passes through
/// `((col − cx) / fx, (row − cy) / fy, 1)` in the camera frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub max_range: f64,
}

impl Default for CameraIntrinsics {
    /// A 640×480 structured-light sensor downsampled by five.
    fn default() -> Self {
        Self {
            width: 128,
            height: 96,
            fx: 114.0,
            fy: 114.0,
            cx: 63.5,
            cy: 47.5,
            max_range: 6.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("camera has zero pixels".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.fx) || !positive(self.fy) {
            return Err(Error::InvalidParameter("focal lengths must be > 0".into()));
        }
        if !positive(self.max_range) {
            return Err(Error::InvalidParameter("max_range must be > 0".into()));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidParameter("principal point must be finite".into()));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Camera-frame ray direction for a row-major pixel index, scaled so its
    /// z component is one. Ray parameters along it are optical-axis depths.
    #[inline]
    pub fn ray_direction(&self, pixel: usize) -> Vector3<f64> {
        let col = (pixel % self.width as usize) as f64;
        let row = (pixel / self.width as usize) as f64;
        self.ray_direction_at(col, row)
    }

    #[inline]
    pub fn ray_direction_at(&self, col: f64, row: f64) -> Vector3<f64> {
        Vector3::new((col - self.cx) / self.fx, (row - self.cy) / self.fy, 1.0)
    }

    /// Image coordinates of a camera-frame point with positive depth.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// Row-major depth image in meters. Invalid pixels hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub depths: Vec<f32>,
    pub timestamp: f64,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, depths: Vec<f32>, timestamp: f64) -> Result<Self> {
        if depths.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} depths for a {}x{} image",
                depths.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            depths,
            timestamp,
        })
    }

    pub fn invalid(width: u32, height: u32, timestamp: f64) -> Self {
        Self {
            width,
            height,
            depths: vec![f32::NAN; width as usize * height as usize],
            timestamp,
        }
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn matches(&self, cam: &CameraIntrinsics) -> bool {
        self.width == cam.width && self.height == cam.height
    }

    /// Depth at `pixel` if it is a usable measurement in `(0, max_range]`.
    #[inline]
    pub fn valid_depth(&self, pixel: usize, max_range: f64) -> Option<f64> {
        let z = self.depths[pixel] as f64;
        is_valid_depth(z, max_range).then_some(z)
    }

    pub fn valid_count(&self, max_range: f64) -> usize {
        self.depths
            .iter()
            .filter(|&&z| is_valid_depth(z as f64, max_range))
            .count()
    }
}

#[inline]
pub fn is_valid_depth(z: f64, max_range: f64) -> bool {
    z.is_finite() && z > 0.0 && z <= max_range
}
