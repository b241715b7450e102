//! Run configuration loaded from TOML (or JSON, by extension).
//!
//! ```toml
//! [run]
//! mode = "multimodal"        # or "audio-only", "kinematic-only"
//! flush_interval_s = 5.0
//! match_tolerance_s = 0.25
//!
//! [scheduler]
//! mode = "rerun"
//! n_windows_max = 4
//! th_kin = 0.05
//! th_audio = 0.3
//!
//! [physio]
//! t_min_cough_dur = 0.23
//!
//! [costs]
//! idle_w = 0.0
//! audio = { energy_j = 0.0031, runtime_s = 0.094 }
//! ```
//!
//! Every table and key is optional; omitted values take their defaults.
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::AudioConfig;
use crate::error::{Error, Result};
use crate::eval::MATCH_TOLERANCE_S;
use crate::postproc::PhysioConstants;
use crate::scheduler::SchedulerConfig;
use crate::simkit::{CostTable, SweepGrid};

const MODULE: &str = "config";

/// Which models a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    #[default]
    Multimodal,
    AudioOnly,
    KinematicOnly,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Multimodal => "multimodal",
            RunMode::AudioOnly => "audio-only",
            RunMode::KinematicOnly => "kinematic-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub mode: RunMode,
    /// Cadence of streaming event refinement.
    pub flush_interval_s: f64,
    pub match_tolerance_s: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            mode: RunMode::Multimodal,
            flush_interval_s: 5.0,
            match_tolerance_s: MATCH_TOLERANCE_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub run: RunSettings,
    pub scheduler: SchedulerConfig,
    pub physio: PhysioConstants,
    pub audio: AudioConfig,
    pub costs: CostTable,
    pub sweep: SweepGrid,
}

impl AppConfig {
    pub fn validate(&self) -> Result<()> {
        self.scheduler.validate()?;
        self.physio.validate()?;
        self.costs.validate()?;
        if !(self.run.flush_interval_s > 0.0) {
            return Err(Error::config(MODULE, "run.flush_interval_s must be positive"));
        }
        if !(self.run.match_tolerance_s >= 0.0 && self.run.match_tolerance_s.is_finite()) {
            return Err(Error::config(MODULE, "run.match_tolerance_s must be non-negative"));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str, origin: &str) -> Result<Self> {
        let c: AppConfig = toml::from_str(s).map_err(|e| Error::parse(MODULE, origin, e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_str(s: &str, origin: &str) -> Result<Self> {
        let c: AppConfig = serde_json::from_str(s)
            .map_err(|e| Error::parse(MODULE, origin, format!("line {} column {}: {e}", e.line(), e.column())))?;
        c.validate()?;
        Ok(c)
    }

    /// Loads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(MODULE, path, e))?;
        let origin = path.display().to_string();
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::from_json_str(&s, &origin),
            _ => Self::from_toml_str(&s, &origin),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
