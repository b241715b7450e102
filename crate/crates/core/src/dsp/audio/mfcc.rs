use std::f64::consts::PI;

use super::mel::MelSpectrogram;
use super::MODULE;
use crate::error::{Error, Result};
use crate::registry::N_MFCC;

/// Floor applied before the log so silent frames stay finite.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccFrame {
    pub coeffs: [f64; N_MFCC],
}

/// Orthonormal DCT-II basis rows 0..N_MFCC for `n_mel` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineLut {
    table: Vec<[f64; N_MFCC]>,
}

fn dct_scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

impl CosineLut {
    pub fn new(n_mel: usize) -> Self {
        let table = (0..n_mel)
            .map(|i| {
                std::array::from_fn(|k| {
                    dct_scale(k, n_mel) * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n_mel) as f64).cos()
                })
            })
            .collect();
        Self { table }
    }

    pub fn n_mel(&self) -> usize {
        self.table.len()
    }
}

/// Log-Mel then DCT-II, first 13 coefficients per frame. `lut` selects the
/// table path; `None` evaluates the cosines directly.
pub fn mfcc(mel: &MelSpectrogram, lut: Option<&CosineLut>) -> Result<Vec<MfccFrame>> {
    if mel.band_mask.is_some() {
        return Err(Error::invalid(MODULE, "MFCC needs every Mel band, got a masked spectrogram"));
    }
    let n = mel.n_mel;
    if let Some(l) = lut {
        if l.n_mel() != n {
            return Err(Error::invalid(
                MODULE,
                format!("cosine table built for {} bands, spectrogram has {n}", l.n_mel()),
            ));
        }
    }
    let mut log_band = vec![0.0; n];
    Ok((0..mel.n_frames)
        .map(|f| {
            for (lb, row) in log_band.iter_mut().zip(&mel.bands) {
                *lb = row[f].max(LOG_FLOOR).ln();
            }
            let coeffs = std::array::from_fn(|k| match lut {
                Some(l) => log_band.iter().zip(&l.table).map(|(x, c)| x * c[k]).sum(),
                None => {
                    let s = dct_scale(k, n);
                    log_band
                        .iter()
                        .enumerate()
                        .map(|(i, x)| x * s * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                        .sum()
                }
            });
            MfccFrame { coeffs }
        })
        .collect())
}

/// Coefficient-major view: `rows[k][frame]`.
pub fn mfcc_rows(frames: &[MfccFrame]) -> Vec<Vec<f64>> {
    (0..N_MFCC).map(|k| frames.iter().map(|f| f.coeffs[k]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mel_from(bands: Vec<Vec<f64>>) -> MelSpectrogram {
        MelSpectrogram {
            n_mel: bands.len(),
            n_frames: bands[0].len(),
            band_mask: None,
            bands,
        }
    }

    #[test]
    fn constant_bands_have_only_dc() {
        let mel = mel_from(vec![vec![0.7; 3]; 64]);
        let lut = CosineLut::new(64);
        for f in mfcc(&mel, Some(&lut)).unwrap() {
            assert_eq!(f.coeffs.len(), 13);
            assert!((f.coeffs[0] - 0.7f64.ln() * 8.0).abs() < 1e-12);
            for c in &f.coeffs[1..] {
                assert!(c.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn masked_input_rejected() {
        let mut mel = mel_from(vec![vec![1.0; 2]; 2]);
        mel.band_mask = Some(vec![0, 1]);
        assert!(mfcc(&mel, None).is_err());
    }

    #[test]
    fn silent_frames_finite() {
        let mel = mel_from(vec![vec![0.0; 4]; 64]);
        assert!(mfcc(&mel, None).unwrap().iter().all(|f| f.coeffs.iter().all(|c| c.is_finite())));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn lut_and_direct_agree(vals in prop::collection::vec(0.0f64..10.0, 64 * 5)) {
            let bands: Vec<Vec<f64>> = vals.chunks(5).map(<[f64]>::to_vec).collect();
            let mel = mel_from(bands);
            let a = mfcc(&mel, Some(&CosineLut::new(64))).unwrap();
            let b = mfcc(&mel, None).unwrap();
            for (fa, fb) in a.iter().zip(&b) {
                for (x, y) in fa.coeffs.iter().zip(&fb.coeffs) {
                    prop_assert!((x - y).abs() <= 1e-6);
                }
            }
        }
    }
}
