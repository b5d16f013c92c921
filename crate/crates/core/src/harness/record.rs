//! Trajectory CSV: `timestamp,tx,ty,tz,qw,qx,qy,qz`, one row per frame.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::geometry::Pose;
use crate::{Error, Result};

pub const HEADER: [&str; 8] = ["timestamp", "tx", "ty", "tz", "qw", "qx", "qy", "qz"];
const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub rows: Vec<(f64, Pose)>,
}

impl TrajectoryRecord {
    pub fn push(&mut self, timestamp: f64, pose: Pose) {
        self.rows.push((timestamp, pose));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes shortest round-trip decimal representations.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(HEADER).map_err(fmt)?;
        for (t, p) in &self.rows {
            let mut row = vec![t.to_string()];
            row.extend(p.to_array().iter().map(f64::to_string));
            out.write_record(&row).map_err(fmt)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut input = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        let header = input.headers().map_err(fmt)?;
        if header.iter().map(str::trim).ne(HEADER) {
            return Err(Error::Format(format!("expected header {}", HEADER.join(","))));
        }
        let mut rec = Self::default();
        for (line, row) in input.records().enumerate() {
            let row = row.map_err(fmt)?;
            let values: Vec<f64> = row
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("row {}: {}", line + 1, e)))?;
            if values.len() != 8 {
                return Err(Error::Format(format!("row {}: expected 8 fields", line + 1)));
            }
            let q = &values[4..];
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::Format(format!("row {}: quaternion norm {}", line + 1, norm)));
            }
            let pose = Pose::from_array(values[1..].try_into().unwrap())
                .map_err(|e| Error::Format(format!("row {}: {}", line + 1, e)))?;
            if let Some((last, _)) = rec.rows.last() {
                if values[0].is_nan() || values[0] <= *last {
                    return Err(Error::Format(format!("row {}: timestamps must increase", line + 1)));
                }
            }
            rec.push(values[0], pose);
        }
        Ok(rec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(f)
    }
}
