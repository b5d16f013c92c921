//! Run configuration: a TOML file with one table per component.
//!
//! ```toml
//! [observation]   # sigma_m, k_c, beta, m, lambda
//! [occlusion]     # p_vis_given_vis, p_vis_given_occ, reference_dt, initial_p_vis
//! [process]       # trans_sigma, rot_sigma, trans_sigma_ctrl, rot_sigma_ctrl, mode
//! [filter]        # particles, seed, ess_threshold, estimator,
//!                 # prior_trans_sigma, prior_rot_sigma, parallel
//! [camera]        # width, height, fx, fy, cx, cy, max_range
//! ```
//!
//! Missing tables and keys take their defaults; unknown ones are rejected.
//! Any key can be overridden from the environment as
//! `DEPTHTRACK_<TABLE>_<KEY>`, e.g. `DEPTHTRACK_FILTER_PARTICLES=500`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::filter::FilterParams;
use crate::geometry::CameraIntrinsics;
use crate::observation::ObservationParams;
use crate::occlusion::OcclusionParams;
use crate::process::ProcessParams;
use crate::{Error, Result};

pub const ENV_PREFIX: &str = "DEPTHTRACK_";
const SECTIONS: [&str; 5] = ["observation", "occlusion", "process", "filter", "camera"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub observation: ObservationParams,
    pub occlusion: OcclusionParams,
    pub process: ProcessParams,
    pub filter: FilterParams,
    pub camera: CameraIntrinsics,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.observation.validate()?;
        self.occlusion.validate()?;
        self.process.validate()?;
        self.filter.validate()?;
        self.camera.validate()?;
        if self.camera.max_range != self.observation.m {
            return Err(Error::Config(format!(
                "camera.max_range {} differs from observation.m {}",
                self.camera.max_range, self.observation.m
            )));
        }
        Ok(())
    }

    /// Parses `text` and applies overrides from `env`.
    pub fn from_toml<I, K, V>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, value) in env {
            apply_override(&mut table, key.as_ref(), value.as_ref())?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or starts from defaults when `None`) and applies the
    /// process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml(&text, std::env::vars())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let Some(rest) = key.strip_prefix(ENV_PREFIX) else {
        return Ok(());
    };
    let rest = rest.to_ascii_lowercase();
    let Some((section, field)) = rest.split_once('_') else {
        return Err(Error::Config(format!("{}: expected {}<TABLE>_<KEY>", key, ENV_PREFIX)));
    };
    if !SECTIONS.contains(&section) {
        return Err(Error::Config(format!("{}: unknown table {}", key, section)));
    }
    // bare TOML literal if it parses as one, otherwise a string
    let value = format!("v = {}", raw)
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sub) = entry else {
        return Err(Error::Config(format!("{} is not a table", section)));
    };
    sub.insert(field.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::Estimator;
    use crate::process::ProcessMode;

    const NO_ENV: [(&str, &str); 0] = [];

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("", NO_ENV).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections() {
        let cfg = RunConfig::from_toml(
            "[filter]\nparticles = 50\nestimator = \"max_weight\"\n[process]\nmode = \"controlled\"\n",
            NO_ENV,
        )
        .unwrap();
        assert_eq!(cfg.filter.particles, 50);
        assert_eq!(cfg.filter.estimator, Estimator::MaxWeight);
        assert_eq!(cfg.process.mode, ProcessMode::Controlled);
        assert_eq!(cfg.observation, ObservationParams::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("[filter]\nparticle = 5\n", NO_ENV), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[filters]\n", NO_ENV), Err(Error::Config(_))));
    }

    #[test]
    fn env_overrides() {
        let env = [
            ("DEPTHTRACK_FILTER_PARTICLES", "7"),
            ("DEPTHTRACK_PROCESS_TRANS_SIGMA", "0.5"),
            ("DEPTHTRACK_PROCESS_MODE", "controlled"),
            ("HOME", "/root"),
        ];
        let cfg = RunConfig::from_toml("[filter]\nparticles = 3\n", env).unwrap();
        assert_eq!(cfg.filter.particles, 7);
        assert_eq!(cfg.process.trans_sigma, 0.5);
        assert_eq!(cfg.process.mode, ProcessMode::Controlled);
        assert!(RunConfig::from_toml("", [("DEPTHTRACK_FILTER_BOGUS", "1")]).is_err());
        assert!(RunConfig::from_toml("", [("DEPTHTRACK_NOPE_X", "1")]).is_err());
    }

    #[test]
    fn inconsistent_range_rejected() {
        assert!(RunConfig::from_toml("[observation]\nm = 4.0\n", NO_ENV).is_err());
        assert!(RunConfig::from_toml("[observation]\nm = 4.0\n[camera]\nmax_range = 4.0\n", NO_ENV).is_ok());
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.filter.ess_threshold = Some(0.5);
        cfg.occlusion.initial_p_vis = 0.7;
        assert_eq!(RunConfig::from_toml(&cfg.to_toml(), NO_ENV).unwrap(), cfg);
    }
}
