//! Recording ingestion: signal containers, resampling, sliding-window framing
//! and file loaders for audio, IMU, annotation and subject metadata files.

mod frame;
mod load;
mod resample;

pub use frame::{frame_stream, Window};
pub use load::{
    load_annotations, load_audio_wav, load_imu_csv, load_meta, load_recording, write_audio_wav,
    write_imu_csv, Recording,
};
pub use resample::{decimate, DECIMATION_TAPS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "ingest";

/// Sensing modality of a window or model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Audio,
    Kinematic,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Audio => "audio",
            Modality::Kinematic => "kinematic",
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Anything that can be cut into timestamped windows.
pub trait Signal: Sized + Clone {
    const MODALITY: Modality;

    fn fs(&self) -> f64;
    fn t0(&self) -> f64;
    fn len(&self) -> usize;
    /// Copy of `len` samples starting at sample `start`, with `t0` shifted.
    fn slice(&self, start: usize, len: usize) -> Self;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn duration(&self) -> f64 {
        self.len() as f64 / self.fs()
    }

    /// Sample index of absolute time `t`, rounded to the nearest sample.
    fn index_of(&self, t: f64) -> i64 {
        ((t - self.t0()) * self.fs()).round() as i64
    }
}

/// Mono microphone signal with amplitudes in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    fs: f64,
    t0: f64,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, fs: f64, t0: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::invalid(MODULE, format!("sampling rate must be positive, got {fs}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid(MODULE, "t0 must be finite"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(MODULE, format!("non-finite audio sample at index {i}")));
        }
        Ok(Self { samples, fs, t0 })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

impl Signal for AudioSignal {
    const MODALITY: Modality = Modality::Audio;

    fn fs(&self) -> f64 {
        self.fs
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn len(&self) -> usize {
        self.samples.len()
    }

    fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            samples: self.samples[start..start + len].to_vec(),
            fs: self.fs,
            t0: self.t0 + start as f64 / self.fs,
        }
    }
}

/// The eight kinematic series the feature extractor works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KinChannel {
    AccelX,
    AccelY,
    AccelZ,
    AccelNorm,
    Yaw,
    Pitch,
    Roll,
    AnglesNorm,
}

impl KinChannel {
    pub const ALL: [KinChannel; 8] = [
        KinChannel::AccelX,
        KinChannel::AccelY,
        KinChannel::AccelZ,
        KinChannel::AccelNorm,
        KinChannel::Yaw,
        KinChannel::Pitch,
        KinChannel::Roll,
        KinChannel::AnglesNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KinChannel::AccelX => "accel_x",
            KinChannel::AccelY => "accel_y",
            KinChannel::AccelZ => "accel_z",
            KinChannel::AccelNorm => "accel_norm",
            KinChannel::Yaw => "yaw",
            KinChannel::Pitch => "pitch",
            KinChannel::Roll => "roll",
            KinChannel::AnglesNorm => "angles_norm",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Tri-axial acceleration plus derived angles, and the l2 norm of each triad.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicSignal {
    channels: [Vec<f64>; 8],
    fs: f64,
    t0: f64,
}

impl KinematicSignal {
    /// Build from the six measured series; the two norm channels are derived.
    #[allow(clippy::too_many_arguments)]
    pub fn from_axes(
        ax: Vec<f64>,
        ay: Vec<f64>,
        az: Vec<f64>,
        yaw: Vec<f64>,
        pitch: Vec<f64>,
        roll: Vec<f64>,
        fs: f64,
        t0: f64,
    ) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::invalid(MODULE, format!("sampling rate must be positive, got {fs}")));
        }
        let n = ax.len();
        for (name, ch) in [("ay", &ay), ("az", &az), ("yaw", &yaw), ("pitch", &pitch), ("roll", &roll)] {
            if ch.len() != n {
                return Err(Error::invalid(
                    MODULE,
                    format!("channel {name} has {} samples, expected {n}", ch.len()),
                ));
            }
        }
        let all = [&ax, &ay, &az, &yaw, &pitch, &roll];
        if all.iter().any(|ch| ch.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid(MODULE, "non-finite kinematic sample"));
        }
        let accel_norm = norm3(&ax, &ay, &az);
        let angles_norm = norm3(&yaw, &pitch, &roll);
        Ok(Self {
            channels: [ax, ay, az, accel_norm, yaw, pitch, roll, angles_norm],
            fs,
            t0,
        })
    }

    pub fn channel(&self, ch: KinChannel) -> &[f64] {
        &self.channels[ch.index()]
    }
}

fn norm3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .collect()
}

impl Signal for KinematicSignal {
    const MODALITY: Modality = Modality::Kinematic;

    fn fs(&self) -> f64 {
        self.fs
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn len(&self) -> usize {
        self.channels[0].len()
    }

    fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            channels: std::array::from_fn(|i| self.channels[i][start..start + len].to_vec()),
            fs: self.fs,
            t0: self.t0 + start as f64 / self.fs,
        }
    }
}

/// Subject characteristics used as constant features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectMeta {
    pub gender: u8,
    pub bmi: f64,
}

impl SubjectMeta {
    pub fn new(gender: u8, bmi: f64) -> Result<Self> {
        let meta = Self { gender, bmi };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gender > 1 {
            return Err(Error::invalid(MODULE, format!("gender must be 0 or 1, got {}", self.gender)));
        }
        if !(self.bmi > 0.0 && self.bmi.is_finite()) {
            return Err(Error::invalid(MODULE, format!("bmi must be positive, got {}", self.bmi)));
        }
        Ok(())
    }
}

impl Default for SubjectMeta {
    fn default() -> Self {
        Self { gender: 0, bmi: 22.0 }
    }
}

/// A closed time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }
}

/// Ground-truth cough intervals of one recording, sorted by start.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub events: Vec<Interval>,
    /// Noise-scenario tag of the recording, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

impl AnnotationSet {
    /// Validates `start < end`, sorts by start and rejects nested events.
    pub fn new(mut events: Vec<Interval>, scenario: Option<String>) -> Result<Self> {
        for (i, e) in events.iter().enumerate() {
            if !(e.start.is_finite() && e.end.is_finite()) {
                return Err(Error::Alignment(format!("event {i} has non-finite bounds")));
            }
            if e.start >= e.end {
                return Err(Error::Alignment(format!(
                    "event {i} ends ({}) before it starts ({})",
                    e.end, e.start
                )));
            }
        }
        events.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        for pair in events.windows(2) {
            if pair[1].end <= pair[0].end {
                return Err(Error::Alignment(format!(
                    "event [{}, {}] is contained in [{}, {}]",
                    pair[1].start, pair[1].end, pair[0].start, pair[0].end
                )));
            }
        }
        Ok(Self { events, scenario })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_channels_match_triads() {
        let k = KinematicSignal::from_axes(
            vec![3.0, 0.0],
            vec![4.0, 0.0],
            vec![0.0, 2.0],
            vec![1.0, 2.0],
            vec![2.0, 3.0],
            vec![2.0, 6.0],
            100.0,
            0.0,
        )
        .unwrap();
        assert_eq!(k.channel(KinChannel::AccelNorm), &[5.0, 2.0]);
        assert_eq!(k.channel(KinChannel::AnglesNorm), &[3.0, 7.0]);
    }

    #[test]
    fn annotations_reject_reversed_and_nested() {
        let err = AnnotationSet::new(vec![Interval::new(2.0, 1.0)], None).unwrap_err();
        assert!(matches!(err, Error::Alignment(_)));
        let err =
            AnnotationSet::new(vec![Interval::new(0.0, 3.0), Interval::new(1.0, 2.0)], None).unwrap_err();
        assert!(matches!(err, Error::Alignment(_)));
        let ok = AnnotationSet::new(vec![Interval::new(4.0, 5.0), Interval::new(1.0, 2.0)], None).unwrap();
        assert_eq!(ok.events[0].start, 1.0);
    }

    #[test]
    fn audio_rejects_bad_rate_and_nan() {
        assert!(AudioSignal::new(vec![0.0], 0.0, 0.0).is_err());
        assert!(AudioSignal::new(vec![f64::NAN], 8000.0, 0.0).is_err());
    }

    #[test]
    fn slice_shifts_t0() {
        let a = AudioSignal::new((0..100).map(|i| i as f64 / 100.0).collect(), 10.0, 1.0).unwrap();
        let s = a.slice(20, 10);
        assert_eq!(s.t0(), 3.0);
        assert_eq!(s.len(), 10);
        assert_eq!(s.samples()[0], 0.2);
    }
}
