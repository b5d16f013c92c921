//! Binary frame-sequence format.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic        4 bytes  "DTRK"
//! version      u8       1
//! flags        u8       bit 0: poses present, bit 1: controls present
//! reserved     u16      0
//! width        u32
//! height       u32
//! frame_count  u32
//! fx fy cx cy max_range   5 × f64
//! per frame:
//!   timestamp  f64
//!   depths     width·height × f32, row-major, invalid = NaN
//!   pose       7 × f64 (tx ty tz qw qx qy qz)   if bit 0
//!   control    6 × f64 (vx vy vz wx wy wz)      if bit 1
//! ```

use std::fs;
use std::path::Path;

use crate::geometry::{CameraIntrinsics, DepthImage, Pose, Twist};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DTRK";
pub const VERSION: u8 = 1;
const HAS_POSE: u8 = 1;
const HAS_CONTROL: u8 = 2;
const HEADER_LEN: usize = 4 + 1 + 1 + 2 + 4 * 3 + 8 * 5;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFrame {
    pub image: DepthImage,
    /// Ground-truth object pose.
    pub pose: Option<Pose>,
    /// Object-frame twist that moved the object from the previous frame to
    /// this one.
    pub control: Option<Twist>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub camera: CameraIntrinsics,
    pub frames: Vec<DatasetFrame>,
}

/// Metadata stored ahead of the frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub version: u8,
    pub has_pose: bool,
    pub has_control: bool,
    pub camera: CameraIntrinsics,
    pub frame_count: u32,
}

impl Dataset {
    pub fn header(&self) -> Header {
        Header {
            version: VERSION,
            has_pose: self.frames.first().is_some_and(|f| f.pose.is_some()),
            has_control: self.frames.first().is_some_and(|f| f.control.is_some()),
            camera: self.camera,
            frame_count: self.frames.len() as u32,
        }
    }

    pub fn has_poses(&self) -> bool {
        self.header().has_pose
    }

    pub fn has_controls(&self) -> bool {
        self.header().has_control
    }

    /// Checks dimensions, channel consistency and timestamp order.
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        let h = self.header();
        let mut last = f64::NEG_INFINITY;
        for (k, f) in self.frames.iter().enumerate() {
            if !f.image.matches(&self.camera) || f.image.depths.len() != self.camera.pixel_count() {
                return Err(Error::DimensionMismatch(format!(
                    "frame {} is {}x{}, header says {}x{}",
                    k, f.image.width, f.image.height, self.camera.width, self.camera.height
                )));
            }
            if f.pose.is_some() != h.has_pose || f.control.is_some() != h.has_control {
                return Err(Error::Format(format!("frame {} has inconsistent channels", k)));
            }
            let t = f.image.timestamp;
            if !(t.is_finite() && t > last) {
                return Err(Error::Format(format!("frame {} timestamp {} not increasing", k, t)));
            }
            last = t;
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let h = self.header();
        let pixels = self.camera.pixel_count();
        let per_frame = 8 + 4 * pixels + if h.has_pose { 56 } else { 0 } + if h.has_control { 48 } else { 0 };
        let mut out = Vec::with_capacity(HEADER_LEN + per_frame * self.frames.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(if h.has_pose { HAS_POSE } else { 0 } | if h.has_control { HAS_CONTROL } else { 0 });
        out.extend_from_slice(&0u16.to_le_bytes());
        for v in [self.camera.width, self.camera.height, h.frame_count] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let c = &self.camera;
        for v in [c.fx, c.fy, c.cx, c.cy, c.max_range] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for f in &self.frames {
            out.extend_from_slice(&f.image.timestamp.to_le_bytes());
            for d in &f.image.depths {
                out.extend_from_slice(&d.to_le_bytes());
            }
            if let Some(p) = f.pose {
                for v in p.to_array() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            if let Some(u) = f.control {
                for v in u.to_array() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let header = read_header(&mut r)?;
        let cam = header.camera;
        let pixels = cam.pixel_count();
        let mut frames = Vec::with_capacity(header.frame_count as usize);
        for _ in 0..header.frame_count {
            let timestamp = r.f64()?;
            let raw = r.take(4 * pixels)?;
            let depths = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let pose = if header.has_pose {
                let mut a = [0.0; 7];
                for v in &mut a {
                    *v = r.f64()?;
                }
                Some(Pose::from_array(a).map_err(|e| Error::Format(e.to_string()))?)
            } else {
                None
            };
            let control = if header.has_control {
                let mut a = [0.0; 6];
                for v in &mut a {
                    *v = r.f64()?;
                }
                Some(Twist::from(a))
            } else {
                None
            };
            frames.push(DatasetFrame {
                image: DepthImage::new(cam.width, cam.height, depths, timestamp)?,
                pose,
                control,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let ds = Dataset { camera: cam, frames };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

/// Reads only the header of an encoded dataset.
pub fn decode_header(bytes: &[u8]) -> Result<Header> {
    read_header(&mut Reader { bytes, pos: 0 })
}

fn read_header(r: &mut Reader) -> Result<Header> {
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a dataset file (bad magic)".into()));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {}", version)));
    }
    let flags = r.take(1)?[0];
    if flags & !(HAS_POSE | HAS_CONTROL) != 0 {
        return Err(Error::Format(format!("unknown flags {:#04x}", flags)));
    }
    r.take(2)?;
    let width = r.u32()?;
    let height = r.u32()?;
    let frame_count = r.u32()?;
    let camera = CameraIntrinsics {
        width,
        height,
        fx: r.f64()?,
        fy: r.f64()?,
        cx: r.f64()?,
        cy: r.f64()?,
        max_range: r.f64()?,
    };
    camera.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(Header {
        version,
        has_pose: flags & HAS_POSE != 0,
        has_control: flags & HAS_CONTROL != 0,
        camera,
        frame_count,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
