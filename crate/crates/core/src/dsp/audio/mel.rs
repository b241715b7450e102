use super::stft::Spectrogram;
use super::MODULE;
use crate::error::{Error, Result};

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK filters from 0 Hz to Nyquist, each scaled to unit area.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<Vec<f64>>,
    /// First and one-past-last non-zero bin of each filter.
    support: Vec<(usize, usize)>,
    pub fs: f64,
    pub frame_len: usize,
}

impl MelFilterbank {
    pub fn new(fs: f64, frame_len: usize, n_mel: usize) -> Self {
        let n_bins = frame_len / 2 + 1;
        let m_max = hz_to_mel(fs / 2.0);
        let edges: Vec<f64> = (0..n_mel + 2)
            .map(|i| mel_to_hz(m_max * i as f64 / (n_mel + 1) as f64))
            .collect();
        let bin_hz = fs / frame_len as f64;
        let mut weights = Vec::with_capacity(n_mel);
        let mut support = Vec::with_capacity(n_mel);
        for m in 0..n_mel {
            let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (hi - lo);
            let row: Vec<f64> = (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let tri = if f > lo && f <= c {
                        (f - lo) / (c - lo)
                    } else if f > c && f < hi {
                        (hi - f) / (hi - c)
                    } else {
                        0.0
                    };
                    tri * norm
                })
                .collect();
            let first = row.iter().position(|&w| w != 0.0).unwrap_or(0);
            let last = row.iter().rposition(|&w| w != 0.0).map_or(0, |i| i + 1);
            support.push((first, last.max(first)));
            weights.push(row);
        }
        Self {
            weights,
            support,
            fs,
            frame_len,
        }
    }

    pub fn n_mel(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Band `m` of one frame of a power spectrum, summed in ascending bin order.
    fn band(&self, m: usize, power: &[f64]) -> f64 {
        let (a, b) = self.support[m];
        let mut acc = 0.0;
        for k in a..b {
            acc += self.weights[m][k] * power[k];
        }
        acc
    }
}

/// Mel band energies. With a mask, only the listed rows exist.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub n_mel: usize,
    pub n_frames: usize,
    pub band_mask: Option<Vec<usize>>,
    /// One row per computed band, in `band_mask` order (or 0..n_mel).
    pub bands: Vec<Vec<f64>>,
}

impl MelSpectrogram {
    /// Row of band `m`, if it was computed.
    pub fn row(&self, m: usize) -> Option<&[f64]> {
        match &self.band_mask {
            None => self.bands.get(m).map(Vec::as_slice),
            Some(mask) => mask.iter().position(|&b| b == m).map(|i| self.bands[i].as_slice()),
        }
    }
}

/// Project the power spectrogram (|X|²) onto the filterbank.
pub fn mel_spectrogram(spec: &Spectrogram, fb: &MelFilterbank, band_mask: Option<&[usize]>) -> Result<MelSpectrogram> {
    if spec.n_bins() != fb.frame_len / 2 + 1 {
        return Err(Error::invalid(
            MODULE,
            format!(
                "spectrogram has {} bins, filterbank expects {}",
                spec.n_bins(),
                fb.frame_len / 2 + 1
            ),
        ));
    }
    let n_mel = fb.n_mel();
    if let Some(mask) = band_mask {
        if let Some(&bad) = mask.iter().find(|&&m| m >= n_mel) {
            return Err(Error::invalid(MODULE, format!("Mel band {bad} out of range 0..{n_mel}")));
        }
    }
    let n_frames = spec.n_frames();
    let rows: Vec<usize> = band_mask.map_or_else(|| (0..n_mel).collect(), <[usize]>::to_vec);
    let mut bands = vec![vec![0.0; n_frames]; rows.len()];
    let mut power = vec![0.0; spec.n_bins()];
    for f in 0..n_frames {
        for (p, bin) in power.iter_mut().zip(&spec.magnitudes) {
            *p = bin[f] * bin[f];
        }
        for (out, &m) in bands.iter_mut().zip(&rows) {
            out[f] = fb.band(m, &power);
        }
    }
    Ok(MelSpectrogram {
        n_mel,
        n_frames,
        band_mask: band_mask.map(<[usize]>::to_vec),
        bands,
    })
}
