//! Audio feature bank: spectral, Mel/MFCC summaries, time-domain and EEPD.

pub mod eepd;
pub mod mel;
pub mod mfcc;
pub mod spectral;
pub mod stft;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use mel::{mel_spectrogram, MelFilterbank, MelSpectrogram};
pub use mfcc::{mfcc, CosineLut, MfccFrame};
pub use spectral::spectral_features;
pub use stft::{stft, Spectrogram};

use crate::dsp::stats;
use crate::error::{Error, Result};
use crate::ingest::{AudioSignal, Signal, SubjectMeta};
use crate::registry::{self, FeatureMask, FeatureVector, N_MEL, SPECTRAL_NAMES, SUMMARY_STATS};

const MODULE: &str = "dsp_audio";

/// Audio framing and extraction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AudioConfig {
    pub fs_hz: f64,
    pub window_len_s: f64,
    pub frame_len: usize,
    pub frame_hop: usize,
    pub n_mel: usize,
    pub use_cosine_lut: bool,
    /// Scale each window to unit peak amplitude before extraction.
    pub normalize_window: bool,
}

impl Default for AudioConfig {
    fn default() -> Self {
        Self {
            fs_hz: 8000.0,
            window_len_s: 0.8,
            frame_len: 1024,
            frame_hop: 512,
            n_mel: N_MEL,
            use_cosine_lut: true,
            normalize_window: false,
        }
    }
}

/// Four statistics (mean, std, max, entropy) of one row.
pub fn summarize_row(row: &[f64]) -> [f64; 4] {
    [
        stats::mean(row),
        stats::std_dev(row),
        row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        stats::entropy(row),
    ]
}

/// Per-row summaries named `{prefix}{row}/{stat}`.
pub fn summarize_bands(rows: &[Vec<f64>], prefix: &str) -> Result<Vec<(String, f64)>> {
    if rows.iter().any(Vec::is_empty) {
        return Err(Error::invalid(MODULE, "cannot summarize a matrix with zero frames"));
    }
    Ok(rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            SUMMARY_STATS
                .iter()
                .zip(summarize_row(row))
                .map(move |(s, v)| (format!("{prefix}{i}/{s}"), v))
        })
        .collect())
}

/// RMS, zero-crossing rate and crest factor.
pub fn time_features(x: &[f64]) -> [f64; 3] {
    [stats::rms(x), stats::zcr(x), stats::crest(x)]
}

/// Holds the filterbank and cosine table so they are built once.
#[derive(Debug, Clone)]
pub struct AudioExtractor {
    config: AudioConfig,
    filterbank: MelFilterbank,
    lut: CosineLut,
}

enum Group {
    Spectral,
    Mel(usize),
    Mfcc,
    Time,
    Eepd(usize),
    Gender,
}

fn classify(name: &str) -> Option<Group> {
    let parts: Vec<&str> = name.split('/').collect();
    match parts.as_slice() {
        ["audio", "spec", _] => Some(Group::Spectral),
        ["audio", "time", _] => Some(Group::Time),
        ["audio", b, _] if b.starts_with("mel") => b[3..].parse().ok().map(Group::Mel),
        ["audio", b, _] if b.starts_with("mfcc") => Some(Group::Mfcc),
        ["audio", b] if b.starts_with("eepd") => b[4..].parse().ok().map(Group::Eepd),
        ["meta", "gender"] => Some(Group::Gender),
        _ => None,
    }
}

impl AudioExtractor {
    pub fn new(config: AudioConfig) -> Result<Self> {
        if !(config.fs_hz >= 2000.0 && config.fs_hz.is_finite()) {
            return Err(Error::config(MODULE, format!("audio rate must be at least 2 kHz, got {}", config.fs_hz)));
        }
        if !config.frame_len.is_power_of_two() || config.frame_hop == 0 {
            return Err(Error::config(MODULE, "STFT frame length must be a power of two and hop positive"));
        }
        if config.n_mel != N_MEL {
            return Err(Error::config(MODULE, format!("the registry defines {N_MEL} Mel bands, got {}", config.n_mel)));
        }
        let filterbank = MelFilterbank::new(config.fs_hz, config.frame_len, config.n_mel);
        let lut = CosineLut::new(config.n_mel);
        Ok(Self {
            config,
            filterbank,
            lut,
        })
    }

    pub fn config(&self) -> &AudioConfig {
        &self.config
    }

    /// Compute exactly the features in `mask`, in mask order.
    pub fn extract(&self, window: &AudioSignal, mask: &FeatureMask, meta: &SubjectMeta) -> Result<FeatureVector> {
        let cfg = &self.config;
        if (window.fs() - cfg.fs_hz).abs() > 1e-6 {
            return Err(Error::invalid(
                MODULE,
                format!("window sampled at {} Hz, extractor configured for {} Hz", window.fs(), cfg.fs_hz),
            ));
        }
        let expected = (cfg.window_len_s * cfg.fs_hz).round() as usize;
        if window.len().abs_diff(expected) > 1 {
            return Err(Error::invalid(
                MODULE,
                format!("window has {} samples, expected {expected}", window.len()),
            ));
        }

        let mut want_spec = false;
        let mut want_mfcc = false;
        let mut want_time = false;
        let mut mel_rows = BTreeSet::new();
        let mut eepd_bands = BTreeSet::new();
        let mut unknown = Vec::new();
        for name in mask.iter() {
            match classify(name) {
                Some(Group::Spectral) => want_spec = true,
                Some(Group::Mel(b)) => {
                    mel_rows.insert(b);
                }
                Some(Group::Mfcc) => want_mfcc = true,
                Some(Group::Time) => want_time = true,
                Some(Group::Eepd(b)) => {
                    eepd_bands.insert(b);
                }
                Some(Group::Gender) => {}
                None => unknown.push(name),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::invalid(MODULE, format!("not audio features: {}", unknown.join(", "))));
        }

        let scaled;
        let x: &[f64] = if cfg.normalize_window {
            let peak = window.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak > 0.0 {
                scaled = window.samples().iter().map(|v| v / peak).collect::<Vec<_>>();
                &scaled
            } else {
                window.samples()
            }
        } else {
            window.samples()
        };
        let fs = cfg.fs_hz;

        let mut values: HashMap<String, f64> = HashMap::new();
        if want_spec {
            for (n, v) in SPECTRAL_NAMES.iter().zip(spectral_features(x, fs)) {
                values.insert(registry::spectral_name(n), v);
            }
        }
        if want_mfcc || !mel_rows.is_empty() {
            let spec = stft(x, fs, cfg.frame_len, cfg.frame_hop)?;
            let mel = if want_mfcc {
                mel_spectrogram(&spec, &self.filterbank, None)?
            } else {
                let rows: Vec<usize> = mel_rows.iter().copied().collect();
                mel_spectrogram(&spec, &self.filterbank, Some(&rows))?
            };
            for &b in &mel_rows {
                let row = mel.row(b).expect("requested Mel row computed");
                for (s, v) in SUMMARY_STATS.iter().zip(summarize_row(row)) {
                    values.insert(registry::mel_name(b, s), v);
                }
            }
            if want_mfcc {
                let lut = cfg.use_cosine_lut.then_some(&self.lut);
                let rows = mfcc::mfcc_rows(&mfcc(&mel, lut)?);
                for (k, row) in rows.iter().enumerate() {
                    for (s, v) in SUMMARY_STATS.iter().zip(summarize_row(row)) {
                        values.insert(registry::mfcc_name(k, s), v);
                    }
                }
            }
        }
        if want_time {
            for (n, v) in registry::AUDIO_TIME_NAMES.iter().zip(time_features(x)) {
                values.insert(registry::audio_time_name(n), v);
            }
        }
        for &b in &eepd_bands {
            let e = eepd::count_peaks_above_mean(&eepd::band_envelope(x, fs, b));
            values.insert(registry::eepd_name(b), e as f64);
        }
        values.insert(registry::GENDER.to_string(), meta.gender as f64);

        Ok(mask
            .iter()
            .map(|n| (n.to_string(), values[n]))
            .collect())
    }
}

/// One-shot extraction; builds the tables on every call.
pub fn extract_audio_features(
    window: &AudioSignal,
    mask: &FeatureMask,
    meta: &SubjectMeta,
    config: &AudioConfig,
) -> Result<FeatureVector> {
    AudioExtractor::new(config.clone())?.extract(window, mask, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::AudioVariant;
    use std::f64::consts::PI;

    fn window(f: impl Fn(f64) -> f64) -> AudioSignal {
        AudioSignal::new((0..6400).map(|i| f(i as f64 / 8000.0)).collect(), 8000.0, 0.0).unwrap()
    }

    #[test]
    fn summaries_of_constant_and_one_hot_rows() {
        let s = summarize_row(&[2.0; 11]);
        assert_eq!(s[1], 0.0);
        assert_eq!(s[2], s[0]);
        assert!((s[3] - 11f64.ln()).abs() < 1e-12);
        assert_eq!(summarize_row(&[0.0, 0.0, 4.0])[3], 0.0);
    }

    #[test]
    fn summary_counts() {
        assert_eq!(summarize_bands(&vec![vec![1.0; 11]; 64], "audio/mel").unwrap().len(), 256);
        assert_eq!(summarize_bands(&vec![vec![1.0; 11]; 13], "audio/mfcc").unwrap().len(), 52);
        assert!(summarize_bands(&[vec![]], "x").is_err());
    }

    #[test]
    fn time_features_constant_and_sine() {
        let c = time_features(&[0.3; 100]);
        assert!((c[0] - 0.3).abs() < 1e-15);
        assert_eq!(c[1], 0.0);
        assert!((c[2] - 1.0).abs() < 1e-12);
        let w = window(|t| (2.0 * PI * 1000.0 * t).sin());
        let s = time_features(w.samples());
        assert!((s[2] - 2f64.sqrt()).abs() < 0.01 * 2f64.sqrt());
        let changes = stats::sign_changes(w.samples());
        assert!(changes.abs_diff(1600) <= 2, "{changes}");
    }

    #[test]
    fn full_variants_have_expected_sizes() {
        let ex = AudioExtractor::new(AudioConfig::default()).unwrap();
        let w = window(|t| 0.3 * (2.0 * PI * 440.0 * t).sin());
        let meta = SubjectMeta::default();
        let mel = ex.extract(&w, &FeatureMask::audio(AudioVariant::Mel), &meta).unwrap();
        assert_eq!(mel.len(), 293);
        let mfcc = ex.extract(&w, &FeatureMask::audio(AudioVariant::Mfcc), &meta).unwrap();
        assert_eq!(mfcc.len(), 89);
        assert!(mel.values().chain(mfcc.values()).all(f64::is_finite));
    }

    #[test]
    fn single_masked_feature_is_projection() {
        let ex = AudioExtractor::new(AudioConfig::default()).unwrap();
        let w = window(|t| (2.0 * PI * 300.0 * t).sin() * (-t).exp());
        let meta = SubjectMeta::default();
        let full = ex.extract(&w, &FeatureMask::audio(AudioVariant::Mel), &meta).unwrap();
        let m = FeatureMask::new(["audio/mel60/max"]).unwrap();
        let one = ex.extract(&w, &m, &meta).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.get("audio/mel60/max"), full.get("audio/mel60/max"));
    }

    #[test]
    fn zero_window_all_finite() {
        let ex = AudioExtractor::new(AudioConfig::default()).unwrap();
        let w = window(|_| 0.0);
        let mut names = registry::audio_names(AudioVariant::Mel);
        names.extend(registry::audio_names(AudioVariant::Mfcc));
        let fv = ex.extract(&w, &FeatureMask::new(names).unwrap(), &SubjectMeta::default()).unwrap();
        assert!(fv.values().all(f64::is_finite));
    }

    #[test]
    fn kinematic_name_rejected() {
        let ex = AudioExtractor::new(AudioConfig::default()).unwrap();
        let m = FeatureMask::new(["kin/roll/rms"]).unwrap();
        let err = ex.extract(&window(|_| 0.0), &m, &SubjectMeta::default()).unwrap_err();
        assert!(err.to_string().contains("kin/roll/rms"));
    }

    #[test]
    fn wrong_window_length_rejected() {
        let ex = AudioExtractor::new(AudioConfig::default()).unwrap();
        let w = AudioSignal::new(vec![0.0; 4000], 8000.0, 0.0).unwrap();
        assert!(ex.extract(&w, &FeatureMask::audio(AudioVariant::Mel), &SubjectMeta::default()).is_err());
    }
}
