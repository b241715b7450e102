//! Canonical feature names and the [`FeatureVector`] container.
//!
//! Every feature has a stable string name; extractors, masks and model files
//! refer to features only through these names. The registry order below is
//! the column order of feature dumps and the tie-break order for feature
//! elimination.

use std::collections::HashMap;
use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::KinChannel;

const MODULE: &str = "registry";

pub const N_MEL: usize = 64;
pub const N_MFCC: usize = 13;
pub const N_EEPD: usize = 19;

/// Frequency-domain features computed from the Welch PSD.
pub const SPECTRAL_NAMES: [&str; 14] = [
    "decrease",
    "slope",
    "rolloff",
    "skew",
    "centroid",
    "spread",
    "flatness",
    "std",
    "entropy",
    "dominant_freq",
    "psd_total",
    "psd_band_0_1k",
    "psd_band_1k_2k",
    "psd_band_2k_nyq",
];

/// Per-row summary statistics of a Mel or MFCC matrix, in output order.
pub const SUMMARY_STATS: [&str; 4] = ["mean", "std", "max", "entropy"];

pub const AUDIO_TIME_NAMES: [&str; 3] = ["rms", "zcr", "crest"];

/// Per-channel kinematic statistics, in output order.
pub const KIN_STATS: [&str; 13] = [
    "zcr",
    "rms",
    "crest",
    "kurtosis",
    "line_length",
    "azc3",
    "azc4",
    "azc5",
    "azc6",
    "azc7",
    "azc8",
    "azc9",
    "azc10",
];

pub const GENDER: &str = "meta/gender";
pub const BMI: &str = "meta/bmi";

pub fn spectral_name(stat: &str) -> String {
    format!("audio/spec/{stat}")
}

pub fn mel_name(band: usize, stat: &str) -> String {
    format!("audio/mel{band}/{stat}")
}

pub fn mfcc_name(coeff: usize, stat: &str) -> String {
    format!("audio/mfcc{coeff}/{stat}")
}

pub fn audio_time_name(stat: &str) -> String {
    format!("audio/time/{stat}")
}

pub fn eepd_name(band: usize) -> String {
    format!("audio/eepd{band}")
}

pub fn kin_name(ch: KinChannel, stat: &str) -> String {
    format!("kin/{}/{stat}", ch.name())
}

/// Which audio summary variant a model was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AudioVariant {
    Mel,
    Mfcc,
}

fn spectral_names() -> impl Iterator<Item = String> {
    SPECTRAL_NAMES.iter().map(|s| spectral_name(s))
}

fn mel_names() -> impl Iterator<Item = String> {
    (0..N_MEL).flat_map(|b| SUMMARY_STATS.iter().map(move |s| mel_name(b, s)))
}

fn mfcc_names() -> impl Iterator<Item = String> {
    (0..N_MFCC).flat_map(|c| SUMMARY_STATS.iter().map(move |s| mfcc_name(c, s)))
}

fn time_names() -> impl Iterator<Item = String> {
    AUDIO_TIME_NAMES
        .iter()
        .map(|s| audio_time_name(s))
        .chain((0..N_EEPD).map(eepd_name))
}

/// Full audio feature list for one variant: spectral, summaries, time, gender.
pub fn audio_names(variant: AudioVariant) -> Vec<String> {
    let summaries: Vec<String> = match variant {
        AudioVariant::Mel => mel_names().collect(),
        AudioVariant::Mfcc => mfcc_names().collect(),
    };
    spectral_names()
        .chain(summaries)
        .chain(time_names())
        .chain(std::iter::once(GENDER.to_string()))
        .collect()
}

/// The 106 kinematic features: 13 per channel plus gender and BMI.
pub fn kinematic_names() -> Vec<String> {
    KinChannel::ALL
        .iter()
        .flat_map(|&ch| KIN_STATS.iter().map(move |s| kin_name(ch, s)))
        .chain([GENDER.to_string(), BMI.to_string()])
        .collect()
}

/// Every known name in canonical order.
pub fn all_names() -> &'static [String] {
    static ALL: OnceLock<Vec<String>> = OnceLock::new();
    ALL.get_or_init(|| {
        spectral_names()
            .chain(mel_names())
            .chain(mfcc_names())
            .chain(time_names())
            .chain(KinChannel::ALL.iter().flat_map(|&ch| KIN_STATS.iter().map(move |s| kin_name(ch, s))))
            .chain([GENDER.to_string(), BMI.to_string()])
            .collect()
    })
}

fn index_map() -> &'static HashMap<&'static str, usize> {
    static IDX: OnceLock<HashMap<&'static str, usize>> = OnceLock::new();
    IDX.get_or_init(|| all_names().iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect())
}

/// Position of `name` in the canonical order.
pub fn registry_index(name: &str) -> Option<usize> {
    index_map().get(name).copied()
}

pub fn contains(name: &str) -> bool {
    registry_index(name).is_some()
}

/// Fail with every name that is not in the registry.
pub fn validate_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let unknown: Vec<&str> = names.into_iter().filter(|n| !contains(n)).collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::invalid(MODULE, format!("unknown feature names: {}", unknown.join(", "))))
    }
}

/// A validated set of feature names kept in registry order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMask {
    names: Vec<String>,
}

impl FeatureMask {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        validate_names(names.iter().map(String::as_str))?;
        names.sort_by_key(|n| registry_index(n));
        names.dedup();
        Ok(Self { names })
    }

    pub fn audio(variant: AudioVariant) -> Self {
        Self {
            names: audio_names(variant),
        }
    }

    pub fn kinematic() -> Self {
        Self {
            names: kinematic_names(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Named feature values in registry order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(IndexMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.values().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Keep only the names in `mask`, in the mask's order.
    pub fn restrict(&self, mask: &FeatureMask) -> FeatureVector {
        FeatureVector(
            mask.iter()
                .filter_map(|n| self.0.get(n).map(|v| (n.to_string(), *v)))
                .collect(),
        )
    }
}

impl FromIterator<(String, f64)> for FeatureVector {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        FeatureVector(iter.into_iter().collect())
    }
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct RegistryEntry {
    name: String,
    group: String,
    definition: String,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct RegistryFile {
    features: Vec<RegistryEntry>,
}

/// The machine-readable registry shipped with the crate.
pub const REGISTRY_JSON: &str = include_str!("../registry.json");

fn definition(name: &str) -> (&'static str, String) {
    let parts: Vec<&str> = name.split('/').collect();
    match parts.as_slice() {
        ["audio", "spec", stat] => ("audio/spectral", spectral_definition(stat).to_string()),
        ["audio", "time", stat] => (
            "audio/time",
            match *stat {
                "rms" => "sqrt(mean(x^2))",
                "zcr" => "count of i with (x[i] >= 0) != (x[i+1] >= 0), divided by n-1",
                _ => "max|x| / rms, 0 when rms = 0",
            }
            .to_string(),
        ),
        ["audio", band, stat] if band.starts_with("mel") || band.starts_with("mfcc") => {
            let (group, what) = if band.starts_with("mel") {
                ("audio/mel", "Mel band power (64 HTK triangular bands, area-normalized)")
            } else {
                ("audio/mfcc", "MFCC (orthonormal DCT-II of log(max(mel, 1e-10)))")
            };
            (group, format!("{} over frames of {what}", summary_definition(stat)))
        }
        ["audio", eepd] => {
            let k: usize = eepd[4..].parse().unwrap_or(0);
            let lo = 50 + 50 * k;
            (
                "audio/eepd",
                format!(
                    "local maxima above the mean of the smoothed energy envelope in the {lo}-{} Hz band",
                    lo + 50
                ),
            )
        }
        ["kin", _, stat] => ("kinematic", kin_definition(stat)),
        ["meta", "gender"] => ("meta", "subject gender code, 0 or 1".to_string()),
        _ => ("meta", "subject body-mass index, kg/m^2".to_string()),
    }
}

fn summary_definition(stat: &str) -> &'static str {
    match stat {
        "mean" => "mean",
        "std" => "population standard deviation",
        "max" => "maximum",
        _ => "Shannon entropy (natural log) of |row| / sum|row|, 0 for an all-zero row,",
    }
}

fn spectral_definition(stat: &str) -> &'static str {
    match stat {
        "decrease" => "sum_{k>=1} (P[k]-P[0])/k / sum_{k>=1} P[k]",
        "slope" => "least-squares slope of P against frequency",
        "rolloff" => "lowest frequency below which 85% of the PSD mass lies",
        "skew" => "third central moment of frequency weighted by P, over spread^3",
        "centroid" => "sum f P / sum P",
        "spread" => "sqrt(sum (f - centroid)^2 P / sum P)",
        "flatness" => "geometric mean of P over arithmetic mean of P, 1 for zero power",
        "std" => "standard deviation of PSD values across bins",
        "entropy" => "Shannon entropy (natural log) of P / sum P",
        "dominant_freq" => "frequency of the largest PSD bin",
        "psd_total" => "integrated PSD over all frequencies",
        "psd_band_0_1k" => "integrated PSD over [0, 1000) Hz",
        "psd_band_1k_2k" => "integrated PSD over [1000, 2000) Hz",
        _ => "integrated PSD from 2000 Hz to Nyquist",
    }
}

fn kin_definition(stat: &str) -> String {
    match stat {
        "zcr" => "sign changes / (n-1)".to_string(),
        "rms" => "sqrt(mean(x^2))".to_string(),
        "crest" => "max|x| / rms".to_string(),
        "kurtosis" => "Fisher kurtosis m4/m2^2 - 3, 0 for zero variance".to_string(),
        "line_length" => "sum |x[i+1] - x[i]|".to_string(),
        azc => {
            let e: f64 = azc[3..].parse::<f64>().unwrap_or(0.0) / 10.0;
            format!("sign changes of the Douglas-Peucker simplification (epsilon {e:.1}) of the standardized window")
        }
    }
}

/// Registry JSON generated from the code; must equal [`REGISTRY_JSON`].
pub fn generate_registry_json() -> String {
    let file = RegistryFile {
        features: all_names()
            .iter()
            .map(|n| {
                let (group, definition) = definition(n);
                RegistryEntry {
                    name: n.clone(),
                    group: group.to_string(),
                    definition,
                }
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("registry serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_counts() {
        assert_eq!(audio_names(AudioVariant::Mel).len(), 293);
        assert_eq!(audio_names(AudioVariant::Mfcc).len(), 89);
        assert_eq!(kinematic_names().len(), 106);
        assert_eq!(all_names().len(), 14 + 256 + 52 + 22 + 104 + 2);
    }

    #[test]
    fn variants_follow_registry_order() {
        for list in [audio_names(AudioVariant::Mel), audio_names(AudioVariant::Mfcc), kinematic_names()] {
            let idx: Vec<usize> = list.iter().map(|n| registry_index(n).unwrap()).collect();
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn shipped_json_matches_generated() {
        if std::env::var_os("COUGHE_BLESS_REGISTRY").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/registry.json");
            std::fs::write(path, generate_registry_json()).unwrap();
            return;
        }
        assert_eq!(REGISTRY_JSON, generate_registry_json());
    }

    #[test]
    fn mask_rejects_unknown_and_sorts() {
        let err = FeatureMask::new(["audio/mel60/max", "audio/bogus"]).unwrap_err();
        assert!(err.to_string().contains("audio/bogus"));
        let m = FeatureMask::new(["meta/gender", "audio/mel60/max", "audio/spec/centroid"]).unwrap();
        assert_eq!(m.names(), ["audio/spec/centroid", "audio/mel60/max", "meta/gender"]);
    }
}
