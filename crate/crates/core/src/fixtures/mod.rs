//! Deterministic synthetic sessions, stump models that classify them, and
//! brute-force reference implementations for tests.

pub mod oracles;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dsp::filter::bandpass4;
use crate::error::{Error, Result};
use crate::inference::TreeEnsemble;
use crate::ingest::{
    write_audio_wav, write_imu_csv, AnnotationSet, AudioSignal, Interval, KinematicSignal, SubjectMeta,
};

const MODULE: &str = "fixtures";

pub const AUDIO_FS: f64 = 8000.0;
pub const IMU_FS: f64 = 100.0;
/// Quiet lead-in and tail of every session.
pub const EDGE_S: f64 = 1.0;
/// Smallest time slot one event may occupy. Longer than a full audio run
/// (0.8 s + 3 hops of 0.4 s) plus the pulse lead, so the kinematic model is
/// listening again before the next pulse.
pub const MIN_SLOT_S: f64 = 2.5;
/// Lead of the kinematic pulse centre before the audio spike peak.
pub const PULSE_LEAD_S: f64 = 0.2;
pub const PULSE_LEN_S: f64 = 0.1;
/// Audio and IMU noise standard deviations per unit of noise level.
pub const AUDIO_NOISE_STD: f64 = 0.005;
pub const IMU_NOISE_STD: f64 = 0.005;

/// Split threshold of the fixture kinematic model.
pub const KIN_STUMP_LINE_LENGTH: f64 = 0.3;
/// Split threshold of the fixture audio model.
pub const AUDIO_STUMP_RMS: f64 = 0.012;

/// One injected cough.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectedBurst {
    pub onset: f64,
    pub spike_s: f64,
    pub decay_s: f64,
    pub amplitude: f64,
}

impl InjectedBurst {
    pub fn peak(&self) -> f64 {
        self.onset + self.spike_s
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.onset, self.onset + self.spike_s + self.decay_s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub seed: u64,
    pub audio: AudioSignal,
    pub kinematic: KinematicSignal,
    pub annotations: AnnotationSet,
    pub meta: SubjectMeta,
    pub bursts: Vec<InjectedBurst>,
}

/// Burst envelope: raised-cosine attack over the spike, exponential decay
/// reaching e^-5 at the end.
fn envelope(t: f64, b: &InjectedBurst) -> f64 {
    let u = t - b.onset;
    if u < 0.0 || u > b.spike_s + b.decay_s {
        0.0
    } else if u < b.spike_s {
        0.5 * (1.0 - (PI * u / b.spike_s).cos())
    } else {
        (-5.0 * (u - b.spike_s) / b.decay_s).exp()
    }
}

/// A session of `duration_s` seconds with `n_events` coughs placed one per
/// equal slot. `noise` scales additive Gaussian noise on both modalities.
pub fn gen_session(seed: u64, n_events: usize, duration_s: f64, noise: f64) -> Result<SyntheticSession> {
    if !(duration_s > 2.0 * EDGE_S && duration_s.is_finite()) {
        return Err(Error::invalid(MODULE, format!("duration must exceed {} s, got {duration_s}", 2.0 * EDGE_S)));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(MODULE, format!("noise level must be non-negative, got {noise}")));
    }
    let usable = duration_s - 2.0 * EDGE_S;
    if n_events > 0 && usable / (n_events as f64) < MIN_SLOT_S {
        return Err(Error::invalid(
            MODULE,
            format!("{n_events} events do not fit in {duration_s} s (need {MIN_SLOT_S} s each plus {EDGE_S} s edges)"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slot = if n_events > 0 { usable / n_events as f64 } else { 0.0 };
    let bursts: Vec<InjectedBurst> = (0..n_events)
        .map(|i| {
            let spike_s = rng.random_range(0.03..=0.05);
            let decay_s = rng.random_range(0.2..=0.5);
            let room = slot - MIN_SLOT_S;
            InjectedBurst {
                onset: EDGE_S + i as f64 * slot + PULSE_LEAD_S + rng.random_range(0.0..=room),
                spike_s,
                decay_s,
                amplitude: rng.random_range(0.15..=0.3),
            }
        })
        .collect();

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n_audio = (duration_s * AUDIO_FS).round() as usize;
    let mut audio: Vec<f64> = (0..n_audio).map(|_| noise * AUDIO_NOISE_STD * std_normal.sample(&mut rng)).collect();
    for b in &bursts {
        let i0 = (b.onset * AUDIO_FS).floor() as usize;
        let i1 = (((b.onset + b.spike_s + b.decay_s) * AUDIO_FS).ceil() as usize + 1).min(n_audio);
        // filter with a lead-in so the band-pass transient has settled
        let lead = 256;
        let white: Vec<f64> = (0..(i1 - i0 + lead)).map(|_| std_normal.sample(&mut rng)).collect();
        let band = bandpass4(&white, AUDIO_FS, 300.0, 3000.0);
        let band = &band[lead..];
        let rms = (band.iter().map(|v| v * v).sum::<f64>() / band.len() as f64).sqrt().max(1e-12);
        for (k, i) in (i0..i1).enumerate() {
            let t = i as f64 / AUDIO_FS;
            audio[i] += b.amplitude * envelope(t, b) * band[k] / rms;
        }
    }

    let n_imu = (duration_s * IMU_FS).round() as usize;
    let mut ch: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..n_imu).map(|_| noise * IMU_NOISE_STD * std_normal.sample(&mut rng)).collect())
        .collect();
    for v in ch[2].iter_mut() {
        *v += 1.0;
    }
    for b in &bursts {
        let centre = b.peak() - PULSE_LEAD_S;
        let (a0, a1) = (centre - PULSE_LEN_S / 2.0, centre + PULSE_LEN_S / 2.0);
        let amp = 2.0 * b.amplitude;
        for i in ((a0 * IMU_FS).floor().max(0.0) as usize)..((a1 * IMU_FS).ceil() as usize).min(n_imu) {
            let t = i as f64 / IMU_FS;
            if t >= a0 && t <= a1 {
                let s = (PI * (t - a0) / PULSE_LEN_S).sin();
                ch[2][i] += amp * s;
                ch[5][i] += 10.0 * amp * s;
            }
        }
    }
    let [ax, ay, az, yaw, pitch, roll]: [Vec<f64>; 6] = ch.try_into().expect("six channels");
    let kinematic = KinematicSignal::from_axes(ax, ay, az, yaw, pitch, roll, IMU_FS, 0.0)?;
    let annotations = AnnotationSet::new(bursts.iter().map(|b| b.interval()).collect(), Some("synthetic".into()))?;
    Ok(SyntheticSession {
        seed,
        audio: AudioSignal::new(audio, AUDIO_FS, 0.0)?,
        kinematic,
        annotations,
        meta: SubjectMeta::default(),
        bursts,
    })
}

/// File locations of an emitted session.
#[derive(Debug, Clone)]
pub struct SessionPaths {
    pub audio: PathBuf,
    pub imu: PathBuf,
    pub annotations: PathBuf,
    pub meta: PathBuf,
}

impl SyntheticSession {
    pub fn duration_s(&self) -> f64 {
        use crate::ingest::Signal;
        self.audio.duration()
    }

    /// Writes `audio.wav`, `imu.csv`, `annotations.json` and `meta.json`.
    pub fn write_to(&self, dir: &Path) -> Result<SessionPaths> {
        let p = SessionPaths {
            audio: dir.join("audio.wav"),
            imu: dir.join("imu.csv"),
            annotations: dir.join("annotations.json"),
            meta: dir.join("meta.json"),
        };
        write_audio_wav(&p.audio, &self.audio)?;
        write_imu_csv(&p.imu, &self.kinematic)?;
        write_json(&p.annotations, &self.annotations)?;
        write_json(&p.meta, &self.meta)?;
        Ok(p)
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("fixture values serialize");
    std::fs::write(path, text).map_err(|e| Error::io(MODULE, path, e))
}

fn stump_json(modality: &str, window: f64, fs: f64, feature: &str, threshold: f64) -> String {
    format!(
        r#"{{"modality":"{modality}","base_score":0.0,"window_len_s":{window},"fs_hz":{fs},
"feature_names":["{feature}"],
"trees":[[{{"f":"{feature}","t":{threshold},"l":1,"r":2}},{{"leaf":-4.0}},{{"leaf":4.0}}]]}}"#
    )
}

/// Kinematic stump on the vertical-acceleration line length (0.5 s at 100 Hz).
pub fn fixture_kinematic_model_json() -> String {
    stump_json("kinematic", 0.5, IMU_FS, "kin/accel_z/line_length", KIN_STUMP_LINE_LENGTH)
}

/// Audio stump on window RMS (0.8 s at 8 kHz).
pub fn fixture_audio_model_json() -> String {
    stump_json("audio", 0.8, AUDIO_FS, "audio/time/rms", AUDIO_STUMP_RMS)
}

pub fn fixture_models() -> (TreeEnsemble, TreeEnsemble) {
    (
        TreeEnsemble::from_json_str(&fixture_audio_model_json(), "fixture audio model").expect("valid fixture"),
        TreeEnsemble::from_json_str(&fixture_kinematic_model_json(), "fixture kinematic model").expect("valid fixture"),
    )
}

/// Writes `audio_model.json` and `kinematic_model.json`.
pub fn write_fixture_models(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let a = dir.join("audio_model.json");
    let k = dir.join("kinematic_model.json");
    std::fs::write(&a, fixture_audio_model_json()).map_err(|e| Error::io(MODULE, &a, e))?;
    std::fs::write(&k, fixture_kinematic_model_json()).map_err(|e| Error::io(MODULE, &k, e))?;
    Ok((a, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Signal, Window};
    use crate::postproc::segment_power_peaks;

    #[test]
    fn three_events_three_intervals() {
        let s = gen_session(42, 3, 10.0, 0.0).unwrap();
        assert_eq!(s.annotations.len(), 3);
        assert_eq!(s.audio.len(), 80_000);
        assert_eq!(s.kinematic.len(), 1000);
        for b in &s.bursts {
            assert!((0.03..=0.05).contains(&b.spike_s));
            assert!((0.2..=0.5).contains(&b.decay_s));
        }
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let a = gen_session(7, 4, 12.0, 0.5).unwrap();
        let b = gen_session(7, 4, 12.0, 0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.audio, gen_session(8, 4, 12.0, 0.5).unwrap().audio);
    }

    #[test]
    fn overcrowding_rejected() {
        assert!(gen_session(1, 10, 10.0, 0.0).is_err());
        assert!(gen_session(1, 0, 1.0, 0.0).is_err());
    }

    #[test]
    fn clean_bursts_recovered_by_hysteresis() {
        let s = gen_session(42, 3, 10.0, 0.0).unwrap();
        for b in &s.bursts {
            let w = Window::at(&s.audio, b.onset - 0.2, 0.8).unwrap();
            let regions = segment_power_peaks(&w.payload).unwrap();
            assert_eq!(regions.len(), 1, "{regions:?}");
            // direct scan: the loudest raw sample lies inside the region
            let x = w.payload.samples();
            let loud = (0..x.len()).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap();
            let t_loud = w.t_start + loud as f64 / AUDIO_FS;
            assert!(regions[0].t_start <= t_loud + 0.01 && t_loud <= regions[0].t_end + 0.01);
            assert!((regions[0].t_peak - b.peak()).abs() < 0.05);
        }
    }

    #[test]
    fn fixture_models_parse() {
        let (a, k) = fixture_models();
        assert_eq!(a.feature_names, vec!["audio/time/rms"]);
        assert_eq!(k.window_len_s, 0.5);
    }
}
