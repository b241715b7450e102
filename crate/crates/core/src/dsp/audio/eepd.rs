use crate::dsp::filter::{bandpass4, moving_average};
use crate::registry::N_EEPD;

pub const EEPD_BAND_WIDTH_HZ: f64 = 50.0;
pub const EEPD_FIRST_HZ: f64 = 50.0;
/// Total span of the triangular envelope smoother (two cascaded boxes of
/// half this length). A single 10 ms box has nulls at every multiple of
/// 100 Hz and would erase envelope modulation at those rates.
pub const EEPD_SMOOTH_S: f64 = 0.010;

/// Lower and upper edge of EEPD band `k`.
pub fn eepd_band(k: usize) -> (f64, f64) {
    let lo = EEPD_FIRST_HZ + EEPD_BAND_WIDTH_HZ * k as f64;
    (lo, lo + EEPD_BAND_WIDTH_HZ)
}

/// Smoothed energy envelope of band `k`.
pub fn band_envelope(x: &[f64], fs: f64, k: usize) -> Vec<f64> {
    let (lo, hi) = eepd_band(k);
    let y = bandpass4(x, fs, lo, hi);
    let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let half = ((EEPD_SMOOTH_S * fs / 2.0).round() as usize).max(1);
    moving_average(&moving_average(&sq, half), half)
}

/// Interior local maxima (`e[i-1] < e[i] >= e[i+1]`) strictly above the mean.
pub fn count_peaks_above_mean(e: &[f64]) -> usize {
    if e.len() < 3 {
        return 0;
    }
    let m = e.iter().sum::<f64>() / e.len() as f64;
    e.windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > m)
        .count()
}

/// Envelope peak counts for the 19 bands.
pub fn eepd(x: &[f64], fs: f64) -> [usize; N_EEPD] {
    std::array::from_fn(|k| count_peaks_above_mean(&band_envelope(x, fs, k)))
}
