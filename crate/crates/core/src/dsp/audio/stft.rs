use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::MODULE;
use crate::error::{Error, Result};

/// Magnitude spectrogram, stored as `magnitudes[bin][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub hop: usize,
    pub fs: f64,
}

impl Spectrogram {
    pub fn n_bins(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn n_frames(&self) -> usize {
        self.magnitudes.first().map_or(0, Vec::len)
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided FFT magnitudes of each Hann-weighted frame of `x`.
fn framed_spectra(x: &[f64], frame_len: usize, hop: usize) -> Vec<Vec<Complex64>> {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(frame_len);
    let w = hann(frame_len);
    let n_frames = (x.len() - frame_len) / hop + 1;
    let n_bins = frame_len / 2 + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); frame_len];
    (0..n_frames)
        .map(|k| {
            let seg = &x[k * hop..k * hop + frame_len];
            for ((b, s), wi) in buf.iter_mut().zip(seg).zip(&w) {
                *b = Complex64::new(s * wi, 0.0);
            }
            fft.process(&mut buf);
            buf[..n_bins].to_vec()
        })
        .collect()
}

fn check_framing(len: usize, frame_len: usize, hop: usize) -> Result<()> {
    if !frame_len.is_power_of_two() {
        return Err(Error::invalid(MODULE, format!("frame length {frame_len} is not a power of two")));
    }
    if hop == 0 {
        return Err(Error::invalid(MODULE, "STFT hop must be positive"));
    }
    if frame_len > len {
        return Err(Error::invalid(
            MODULE,
            format!("frame length {frame_len} exceeds window of {len} samples"),
        ));
    }
    Ok(())
}

/// Hann-weighted magnitude STFT. Frame `k` covers `[k*hop, k*hop + frame_len)`.
pub fn stft(x: &[f64], fs: f64, frame_len: usize, hop: usize) -> Result<Spectrogram> {
    check_framing(x.len(), frame_len, hop)?;
    let spectra = framed_spectra(x, frame_len, hop);
    let n_bins = frame_len / 2 + 1;
    let magnitudes = (0..n_bins)
        .map(|b| spectra.iter().map(|f| f[b].norm()).collect())
        .collect();
    Ok(Spectrogram {
        magnitudes,
        frame_len,
        hop,
        fs,
    })
}

/// One-sided Welch PSD estimate with Hann segments of `seg_len` and 50%
/// overlap. Returns `(freqs, psd)` in Hz and units²/Hz.
pub fn welch_psd(x: &[f64], fs: f64, seg_len: usize) -> (Vec<f64>, Vec<f64>) {
    let hop = (seg_len / 2).max(1);
    let spectra = framed_spectra(x, seg_len, hop);
    let w = hann(seg_len);
    let scale = 1.0 / (fs * w.iter().map(|v| v * v).sum::<f64>());
    let n_bins = seg_len / 2 + 1;
    let mut psd = vec![0.0; n_bins];
    for f in &spectra {
        for (p, c) in psd.iter_mut().zip(f) {
            *p += c.norm_sqr();
        }
    }
    let n_seg = spectra.len() as f64;
    for (k, p) in psd.iter_mut().enumerate() {
        *p *= scale / n_seg;
        let edge = k == 0 || (seg_len.is_multiple_of(2) && k == n_bins - 1);
        if !edge {
            *p *= 2.0;
        }
    }
    let freqs = (0..n_bins).map(|k| k as f64 * fs / seg_len as f64).collect();
    (freqs, psd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::oracles::dft_naive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_signal_zero_magnitudes() {
        let s = stft(&[0.0; 6400], 8000.0, 1024, 512).unwrap();
        assert_eq!(s.n_bins(), 513);
        assert_eq!(s.n_frames(), 11);
        assert!(s.magnitudes.iter().flatten().all(|&m| m == 0.0));
    }

    #[test]
    fn tone_peaks_at_expected_bin() {
        let x: Vec<f64> = (0..6400).map(|i| (2.0 * PI * 1000.0 * i as f64 / 8000.0).sin()).collect();
        let s = stft(&x, 8000.0, 1024, 512).unwrap();
        for f in 0..s.n_frames() {
            let arg = (0..s.n_bins())
                .max_by(|&a, &b| s.magnitudes[a][f].total_cmp(&s.magnitudes[b][f]))
                .unwrap();
            assert_eq!(arg, 128);
        }
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..6400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = stft(&x, 8000.0, 1024, 512).unwrap();
        let w = hann(1024);
        for f in [0, 5, 10] {
            let seg: Vec<f64> = x[f * 512..f * 512 + 1024].iter().zip(&w).map(|(a, b)| a * b).collect();
            let d = dft_naive(&seg);
            for b in 0..513 {
                let want = d[b].norm();
                let got = s.magnitudes[b][f];
                assert!((got - want).abs() <= 1e-6 * want.max(1e-3), "bin {b}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn rejects_bad_framing() {
        assert!(stft(&[0.0; 100], 8000.0, 1024, 512).is_err());
        assert!(stft(&[0.0; 2000], 8000.0, 1000, 500).is_err());
    }

    #[test]
    fn welch_parseval_for_white_noise() {
        // integrated PSD approximates the signal variance
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..64000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (f, p) = welch_psd(&x, 8000.0, 1024);
        let df = f[1] - f[0];
        let total: f64 = p.iter().sum::<f64>() * df;
        assert!((total - 1.0 / 3.0).abs() < 0.02, "{total}");
    }
}
