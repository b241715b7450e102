//! Kinematic features: per-channel time statistics and approximate zero
//! crossings on a Douglas-Peucker simplification.

use std::collections::HashMap;

use crate::dsp::stats;
use crate::error::{Error, Result};
use crate::ingest::{KinChannel, KinematicSignal, Signal, SubjectMeta};
use crate::registry::{self, FeatureMask, FeatureVector};

const MODULE: &str = "dsp_kinematic";

/// AZC tolerances 0.3 to 1.0 in steps of 0.1, as tenths.
pub const AZC_EPSILON_TENTHS: [u32; 8] = [3, 4, 5, 6, 7, 8, 9, 10];
/// Lower bound on the standard deviation used for standardization.
pub const STD_FLOOR: f64 = 1e-9;

/// Indices kept by Douglas-Peucker at tolerance `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedPolyline {
    pub indices: Vec<usize>,
    pub epsilon: f64,
}

/// Iterative Douglas-Peucker using vertical distance to the chord. A point is
/// kept when its deviation exceeds `epsilon`; equal maxima go to the lowest index.
pub fn douglas_peucker(y: &[f64], epsilon: f64) -> Result<SimplifiedPolyline> {
    if y.len() < 2 {
        return Err(Error::invalid(MODULE, format!("need at least 2 samples, got {}", y.len())));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(MODULE, format!("epsilon must be non-negative, got {epsilon}")));
    }
    let n = y.len();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let span = (hi - lo) as f64;
        let mut best = lo;
        let mut best_d = -1.0;
        for i in lo + 1..hi {
            let chord = y[lo] + (y[hi] - y[lo]) * ((i - lo) as f64 / span);
            let d = (y[i] - chord).abs();
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d > epsilon {
            keep[best] = true;
            stack.push((best, hi));
            stack.push((lo, best));
        }
    }
    Ok(SimplifiedPolyline {
        indices: (0..n).filter(|&i| keep[i]).collect(),
        epsilon,
    })
}

/// Mean-remove and divide by the standard deviation (floored).
pub fn standardize(x: &[f64]) -> Vec<f64> {
    let m = stats::mean(x);
    let s = stats::std_dev(x).max(STD_FLOOR);
    x.iter().map(|v| (v - m) / s).collect()
}

/// Sign changes across the retained samples of the simplified, standardized signal.
pub fn azc(x: &[f64], epsilon: f64) -> Result<usize> {
    let z = standardize(x);
    let poly = douglas_peucker(&z, epsilon)?;
    let kept: Vec<f64> = poly.indices.iter().map(|&i| z[i]).collect();
    Ok(stats::sign_changes(&kept))
}

/// The 13 per-channel statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinStats {
    pub zcr: f64,
    pub rms: f64,
    pub crest: f64,
    pub kurtosis: f64,
    pub line_length: f64,
    pub azc: [usize; 8],
}

impl KinStats {
    /// Values in [`registry::KIN_STATS`] order.
    pub fn to_array(&self) -> [f64; 13] {
        let mut out = [0.0; 13];
        out[..5].copy_from_slice(&[self.zcr, self.rms, self.crest, self.kurtosis, self.line_length]);
        for (o, a) in out[5..].iter_mut().zip(self.azc) {
            *o = a as f64;
        }
        out
    }
}

pub fn kin_stats(x: &[f64]) -> Result<KinStats> {
    if x.is_empty() {
        return Err(Error::invalid(MODULE, "empty kinematic channel"));
    }
    let mut azcs = [0usize; 8];
    if x.len() >= 2 {
        for (a, e) in azcs.iter_mut().zip(AZC_EPSILON_TENTHS) {
            *a = azc(x, e as f64 / 10.0)?;
        }
    }
    Ok(KinStats {
        zcr: stats::zcr(x),
        rms: stats::rms(x),
        crest: stats::crest(x),
        kurtosis: stats::kurtosis(x),
        line_length: stats::line_length(x),
        azc: azcs,
    })
}

fn channel_stat(ch: &[f64], stat: &str) -> Result<f64> {
    Ok(match stat {
        "zcr" => stats::zcr(ch),
        "rms" => stats::rms(ch),
        "crest" => stats::crest(ch),
        "kurtosis" => stats::kurtosis(ch),
        "line_length" => stats::line_length(ch),
        azc_name => {
            let tenths: u32 = azc_name[3..].parse().expect("registry AZC name");
            if ch.len() < 2 {
                0.0
            } else {
                azc(ch, tenths as f64 / 10.0)? as f64
            }
        }
    })
}

/// Masked projection of the 106 kinematic features.
pub fn extract_kinematic_features(window: &KinematicSignal, mask: &FeatureMask, meta: &SubjectMeta) -> Result<FeatureVector> {
    if window.is_empty() {
        return Err(Error::invalid(MODULE, "empty kinematic window"));
    }
    let mut cache: HashMap<&str, f64> = HashMap::new();
    let mut unknown = Vec::new();
    for name in mask.iter() {
        let v = match name {
            registry::GENDER => meta.gender as f64,
            registry::BMI => meta.bmi,
            _ => {
                let parts: Vec<&str> = name.split('/').collect();
                match (parts.as_slice(), parts.get(1).and_then(|c| KinChannel::from_name(c))) {
                    (["kin", _, stat], Some(ch)) => channel_stat(window.channel(ch), stat)?,
                    _ => {
                        unknown.push(name);
                        continue;
                    }
                }
            }
        };
        cache.insert(name, v);
    }
    if !unknown.is_empty() {
        return Err(Error::invalid(MODULE, format!("not kinematic features: {}", unknown.join(", "))));
    }
    Ok(mask.iter().map(|n| (n.to_string(), cache[n])).collect())
}

/// An illustrative 36-feature kinematic mask of the final deployed size. It
/// keeps subject metadata and drops every accelerometer-Y feature.
pub fn final_kinematic_mask() -> FeatureMask {
    let mut names = Vec::new();
    let pick = |ch: KinChannel, stats: &[&str], names: &mut Vec<String>| {
        names.extend(stats.iter().map(|s| registry::kin_name(ch, s)));
    };
    pick(KinChannel::Roll, &["line_length", "azc10", "rms", "kurtosis", "azc3", "azc5", "azc7"], &mut names);
    pick(KinChannel::AccelZ, &["azc9", "line_length", "rms", "kurtosis", "crest"], &mut names);
    pick(KinChannel::AccelX, &["line_length", "rms", "kurtosis", "azc4", "azc8"], &mut names);
    pick(KinChannel::AccelNorm, &["line_length", "kurtosis", "crest", "azc6"], &mut names);
    pick(KinChannel::Yaw, &["line_length", "rms", "azc5"], &mut names);
    pick(KinChannel::Pitch, &["line_length", "rms", "kurtosis", "azc7"], &mut names);
    pick(KinChannel::AnglesNorm, &["line_length", "crest", "kurtosis", "azc3", "azc9", "zcr"], &mut names);
    names.push(registry::GENDER.to_string());
    names.push(registry::BMI.to_string());
    FeatureMask::new(names).expect("registry names")
}
