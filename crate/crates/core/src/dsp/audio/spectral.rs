use super::stft::welch_psd;
use crate::dsp::stats;
use crate::registry::SPECTRAL_NAMES;

/// Fraction of PSD mass below the roll-off frequency.
pub const ROLLOFF_FRACTION: f64 = 0.85;
/// Welch segment length, shortened for windows smaller than this.
pub const WELCH_SEGMENT: usize = 1024;

/// Fourteen PSD-derived features in [`SPECTRAL_NAMES`] order.
pub fn spectral_features(x: &[f64], fs: f64) -> [f64; 14] {
    let seg = WELCH_SEGMENT.min(x.len()).max(1);
    let (freqs, psd) = welch_psd(x, fs, seg);
    psd_features(&freqs, &psd)
}

/// The same features from an explicit PSD, `psd[k]` at `freqs[k]`.
pub fn psd_features(freqs: &[f64], psd: &[f64]) -> [f64; 14] {
    let df = if freqs.len() > 1 { freqs[1] - freqs[0] } else { 1.0 };
    let total: f64 = psd.iter().sum();
    let band = |lo: f64, hi: f64| -> f64 {
        freqs
            .iter()
            .zip(psd)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * df
    };

    let (centroid, spread, skew) = if total > 0.0 {
        let c = freqs.iter().zip(psd).map(|(f, p)| f * p).sum::<f64>() / total;
        let var = freqs.iter().zip(psd).map(|(f, p)| (f - c).powi(2) * p).sum::<f64>() / total;
        let s = var.sqrt();
        let sk = if s > 0.0 {
            freqs.iter().zip(psd).map(|(f, p)| (f - c).powi(3) * p).sum::<f64>() / (total * s.powi(3))
        } else {
            0.0
        };
        (c, s, sk)
    } else {
        (0.0, 0.0, 0.0)
    };

    let decrease = {
        let tail: f64 = psd.iter().skip(1).sum();
        if tail > 0.0 {
            psd.iter()
                .enumerate()
                .skip(1)
                .map(|(k, p)| (p - psd[0]) / k as f64)
                .sum::<f64>()
                / tail
        } else {
            0.0
        }
    };

    let slope = {
        let mf = stats::mean(freqs);
        let mp = stats::mean(psd);
        let var: f64 = freqs.iter().map(|f| (f - mf).powi(2)).sum();
        if var > 0.0 {
            freqs.iter().zip(psd).map(|(f, p)| (f - mf) * (p - mp)).sum::<f64>() / var
        } else {
            0.0
        }
    };

    let rolloff = if total > 0.0 {
        let target = ROLLOFF_FRACTION * total;
        let mut acc = 0.0;
        let mut out = *freqs.last().unwrap_or(&0.0);
        for (f, p) in freqs.iter().zip(psd) {
            acc += p;
            if acc >= target {
                out = *f;
                break;
            }
        }
        out
    } else {
        0.0
    };

    let flatness = {
        let am = stats::mean(psd);
        if am > 0.0 {
            let gm = (psd.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / psd.len() as f64).exp();
            (gm / am).min(1.0)
        } else {
            1.0
        }
    };

    let dominant = psd
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0;

    let out = [
        decrease,
        slope,
        rolloff,
        skew,
        centroid,
        spread,
        flatness,
        stats::std_dev(psd),
        stats::entropy(psd),
        freqs.get(dominant).copied().unwrap_or(0.0),
        total * df,
        band(0.0, 1000.0),
        band(1000.0, 2000.0),
        band(2000.0, f64::INFINITY),
    ];
    debug_assert_eq!(out.len(), SPECTRAL_NAMES.len());
    out
}
