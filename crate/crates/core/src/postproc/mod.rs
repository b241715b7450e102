//! Cough event delineation: hysteresis segmentation of cough-positive audio
//! windows followed by physiology-based refinement of region boundaries.

mod flush;
mod refine;
mod segment;

pub use flush::FlushAccumulator;
pub use refine::{avg_peak_to_end, merge_close_peaks, refine_regions};
pub use segment::{power_envelope, segment_power_peaks, PowerEnvelope, POSTPROC_FS, POWER_SMOOTH_S};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "postproc";

/// One delineated cough. `amplitude` is the peak envelope power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoughRegion {
    pub t_start: f64,
    pub t_peak: f64,
    pub t_end: f64,
    pub amplitude: f64,
}

/// Timing constants of cough physiology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysioConstants {
    /// Minimum spike plus expiration duration; closer peaks are merged.
    pub t_min_cough_dur: f64,
    /// Maximum spike plus expiration duration; closer peaks form a bout.
    pub t_max_cough_dur: f64,
    /// Minimum lead of a start before its peak (half the shortest spike).
    pub t_min_before_pk: f64,
    /// Shortest spike phase, subtracted from the mean in-bout peak gap.
    pub t_min_spike: f64,
    /// Base of the per-bout-position end decay.
    pub decay_base: f64,
    /// Peak-to-end distance used when no bout exists.
    pub fallback_pk_to_end: f64,
    /// Fixed peak-to-end distance; when unset it is computed per session.
    pub pk_to_end_avg: Option<f64>,
}

impl Default for PhysioConstants {
    fn default() -> Self {
        Self {
            t_min_cough_dur: 0.23,
            t_max_cough_dur: 0.55,
            t_min_before_pk: 0.015,
            t_min_spike: 0.03,
            decay_base: 0.5,
            fallback_pk_to_end: 0.25,
            pk_to_end_avg: None,
        }
    }
}

impl PhysioConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.t_min_cough_dur,
            self.t_max_cough_dur,
            self.t_min_before_pk,
            self.t_min_spike,
            self.decay_base,
            self.fallback_pk_to_end,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config(MODULE, "physiology constants must be positive and finite"));
        }
        if self.t_min_cough_dur >= self.t_max_cough_dur {
            return Err(Error::config(MODULE, "t_min_cough_dur must be below t_max_cough_dur"));
        }
        if 2.0 * self.t_min_before_pk >= self.t_min_cough_dur {
            return Err(Error::config(MODULE, "t_min_before_pk must be under half of t_min_cough_dur"));
        }
        if self.t_min_spike >= self.t_min_cough_dur {
            return Err(Error::config(MODULE, "t_min_spike must be below t_min_cough_dur"));
        }
        if self.decay_base > 1.0 {
            return Err(Error::config(MODULE, "decay_base must not exceed 1"));
        }
        if let Some(a) = self.pk_to_end_avg {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::config(MODULE, "pk_to_end_avg must be positive"));
            }
        }
        Ok(())
    }

    /// Largest peak-to-end distance refinement can produce.
    pub fn avg_bound(&self) -> f64 {
        self.pk_to_end_avg
            .unwrap_or((self.t_max_cough_dur - self.t_min_spike).max(self.fallback_pk_to_end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub start: f64,
    pub peak: f64,
    pub end: f64,
}

/// Events file: `{"events":[{"start","peak","end"}], "count": n}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventsFile {
    pub events: Vec<EventRecord>,
    pub count: usize,
}

impl EventsFile {
    pub fn from_regions(regions: &[CoughRegion]) -> Self {
        Self {
            events: regions
                .iter()
                .map(|r| EventRecord {
                    start: r.t_start,
                    peak: r.t_peak,
                    end: r.t_end,
                })
                .collect(),
            count: regions.len(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(MODULE, path, e))?;
        let f: EventsFile = serde_json::from_str(&text).map_err(|e| {
            Error::parse(MODULE, path.display().to_string(), format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        if f.count != f.events.len() {
            return Err(Error::parse(
                MODULE,
                path.display().to_string(),
                format!("count {} disagrees with {} events", f.count, f.events.len()),
            ));
        }
        Ok(f)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("events serialize")
    }
}
