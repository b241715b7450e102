use super::{CoughRegion, MODULE};
use crate::dsp::filter::moving_average;
use crate::error::{Error, Result};
use crate::ingest::{decimate, AudioSignal, Signal};

/// Rate at which the power envelope is computed.
pub const POSTPROC_FS: f64 = 2000.0;
/// Moving-average length of the power envelope.
pub const POWER_SMOOTH_S: f64 = 0.010;

/// Smoothed instantaneous power at 2 kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEnvelope {
    pub power: Vec<f64>,
    pub fs: f64,
    pub t0: f64,
    /// Root mean square of the envelope values.
    pub rms_power: f64,
    pub max_power: f64,
}

pub fn power_envelope(window: &AudioSignal) -> Result<PowerEnvelope> {
    let ratio = window.fs() / POSTPROC_FS;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 {
        return Err(Error::invalid(
            MODULE,
            format!("audio rate {} Hz is not an integer multiple of 2 kHz", window.fs()),
        ));
    }
    let low = decimate(window, factor as usize)?;
    let sq: Vec<f64> = low.samples().iter().map(|v| v * v).collect();
    let power = moving_average(&sq, (POWER_SMOOTH_S * POSTPROC_FS).round() as usize);
    let max_power = power.iter().copied().fold(0.0, f64::max);
    let rms_power = if power.is_empty() {
        0.0
    } else {
        (power.iter().map(|p| p * p).sum::<f64>() / power.len() as f64).sqrt()
    };
    Ok(PowerEnvelope {
        power,
        fs: low.fs(),
        t0: low.t0(),
        rms_power,
        max_power,
    })
}

/// Hysteresis regions of an envelope. A region opens where the power rises
/// from at most `upper` to above it and closes at the first sample below
/// `lower` (or at the end of the window).
pub fn hysteresis_regions(env: &PowerEnvelope) -> Vec<CoughRegion> {
    if !(env.max_power > 0.0) {
        return Vec::new();
    }
    let upper = (env.rms_power + env.max_power) / 2.0;
    let lower = env.rms_power;
    let p = &env.power;
    let t = |i: usize| env.t0 + i as f64 / env.fs;
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    let close = |a: usize, b: usize, out: &mut Vec<CoughRegion>| {
        let mut pk = a;
        for i in a..b {
            if p[i] > p[pk] {
                pk = i;
            }
        }
        out.push(CoughRegion {
            t_start: t(a),
            t_peak: t(pk),
            t_end: t(b),
            amplitude: p[pk],
        });
    };
    for i in 1..p.len() {
        match open {
            None if p[i] > upper && p[i - 1] <= upper => open = Some(i),
            Some(a) if p[i] < lower => {
                close(a, i, &mut out);
                open = None;
            }
            _ => {}
        }
    }
    if let Some(a) = open {
        close(a, p.len(), &mut out);
    }
    out
}

/// Raw cough regions of one cough-positive window.
pub fn segment_power_peaks(window: &AudioSignal) -> Result<Vec<CoughRegion>> {
    Ok(hysteresis_regions(&power_envelope(window)?))
}
