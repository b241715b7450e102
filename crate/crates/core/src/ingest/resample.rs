use std::f64::consts::PI;

use super::{AudioSignal, Signal, MODULE};
use crate::error::{Error, Result};

/// Length of the anti-alias FIR used by [`decimate`].
pub const DECIMATION_TAPS: usize = 63;

/// Hamming-windowed sinc low-pass with unit DC gain. `cutoff` is in cycles
/// per sample.
pub(crate) fn lowpass_fir(taps: usize, cutoff: f64) -> Vec<f64> {
    let mid = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let x = n as f64 - mid;
            let sinc = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            let w = 0.54 - 0.46 * (2.0 * PI * n as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Low-pass filter then keep every `factor`-th sample.
///
/// The filter is a 63-tap linear-phase FIR with cutoff at 0.8 of the new
/// Nyquist frequency, applied without delay; samples beyond either edge are
/// treated as zero.
pub fn decimate(signal: &AudioSignal, factor: usize) -> Result<AudioSignal> {
    if factor == 0 {
        return Err(Error::invalid(MODULE, "decimation factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(signal.clone());
    }
    let x = signal.samples();
    if x.len() < DECIMATION_TAPS {
        return Err(Error::invalid(
            MODULE,
            format!(
                "signal has {} samples, shorter than the {DECIMATION_TAPS}-tap anti-alias filter",
                x.len()
            ),
        ));
    }
    let cutoff = 0.8 * 0.5 / factor as f64;
    let h = lowpass_fir(DECIMATION_TAPS, cutoff);
    let half = (DECIMATION_TAPS / 2) as isize;
    let n = x.len() as isize;
    let out: Vec<f64> = (0..x.len())
        .step_by(factor)
        .map(|i| {
            let i = i as isize;
            let mut acc = 0.0;
            for (k, hk) in h.iter().enumerate() {
                let j = i + half - k as isize;
                if (0..n).contains(&j) {
                    acc += hk * x[j as usize];
                }
            }
            acc
        })
        .collect();
    AudioSignal::new(out, signal.fs() / factor as f64, signal.t0())
}
