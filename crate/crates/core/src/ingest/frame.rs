use super::{Modality, Signal, MODULE};
use crate::error::{Error, Result};

/// A fixed-length slice of one modality's samples with absolute timing.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<S> {
    pub t_start: f64,
    pub t_end: f64,
    pub payload: S,
}

impl<S: Signal> Window<S> {
    pub fn modality(&self) -> Modality {
        S::MODALITY
    }

    /// Cut the window of `len_s` seconds starting at absolute time `t_start`,
    /// or `None` when it does not fit inside `signal`.
    pub fn at(signal: &S, t_start: f64, len_s: f64) -> Option<Self> {
        let start = signal.index_of(t_start);
        let n = (len_s * signal.fs()).round() as usize;
        if start < 0 || n == 0 || start as usize + n > signal.len() {
            return None;
        }
        let payload = signal.slice(start as usize, n);
        let t_start = payload.t0();
        Some(Self {
            t_start,
            t_end: t_start + n as f64 / signal.fs(),
            payload,
        })
    }
}

/// Cut `signal` into windows of `window_len` seconds every `hop` seconds.
///
/// Window `k` starts at sample `round(k * hop * fs)`; the trailing remainder
/// that cannot fill a whole window is dropped.
pub fn frame_stream<S: Signal>(signal: &S, window_len: f64, hop: f64) -> Result<Vec<Window<S>>> {
    if !(hop > 0.0 && hop.is_finite()) {
        return Err(Error::invalid(MODULE, format!("hop must be positive, got {hop}")));
    }
    if !(window_len > 0.0 && window_len.is_finite()) {
        return Err(Error::invalid(MODULE, format!("window length must be positive, got {window_len}")));
    }
    if hop > window_len {
        return Err(Error::invalid(
            MODULE,
            format!("hop {hop} s exceeds window length {window_len} s"),
        ));
    }
    let fs = signal.fs();
    let win_n = (window_len * fs).round() as usize;
    if win_n == 0 {
        return Err(Error::invalid(MODULE, "window shorter than one sample"));
    }
    let mut out = Vec::new();
    for k in 0usize.. {
        let start = (k as f64 * hop * fs).round() as usize;
        if start + win_n > signal.len() {
            break;
        }
        let payload = signal.slice(start, win_n);
        let t_start = payload.t0();
        out.push(Window {
            t_start,
            t_end: t_start + win_n as f64 / fs,
            payload,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AudioSignal, KinematicSignal};
    use proptest::prelude::*;

    fn audio(secs: f64, fs: f64) -> AudioSignal {
        AudioSignal::new(vec![0.0; (secs * fs).round() as usize], fs, 0.0).unwrap()
    }

    #[test]
    fn four_seconds_gives_nine_windows() {
        let w = frame_stream(&audio(4.0, 8000.0), 0.8, 0.4).unwrap();
        assert_eq!(w.len(), 9);
        assert!((w[8].t_start - 3.2).abs() < 1e-12);
        assert!(w.iter().all(|w| w.payload.len() == 6400));
    }

    #[test]
    fn kinematic_half_second_is_fifty_samples() {
        let n = 300;
        let z = vec![0.0; n];
        let k = KinematicSignal::from_axes(
            z.clone(),
            z.clone(),
            z.clone(),
            z.clone(),
            z.clone(),
            z,
            100.0,
            0.0,
        )
        .unwrap();
        let w = frame_stream(&k, 0.5, 0.25).unwrap();
        assert!(w.iter().all(|w| w.payload.len() == 50));
        assert_eq!(w[0].modality(), Modality::Kinematic);
    }

    #[test]
    fn short_signal_has_no_windows() {
        assert!(frame_stream(&audio(0.3, 8000.0), 0.8, 0.4).unwrap().is_empty());
    }

    #[test]
    fn non_positive_hop_rejected() {
        assert!(frame_stream(&audio(1.0, 8000.0), 0.8, 0.0).is_err());
        assert!(frame_stream(&audio(1.0, 8000.0), 0.8, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn count_formula_holds(n in 0usize..5000, win in 1usize..800, hop_frac in 0.05f64..1.0) {
            let fs = 100.0;
            let hop = ((win as f64 * hop_frac).round().max(1.0)) as usize;
            let sig = AudioSignal::new(vec![0.0; n], fs, 0.0).unwrap();
            let w = frame_stream(&sig, win as f64 / fs, hop as f64 / fs).unwrap();
            let expected = if n >= win { (n - win) / hop + 1 } else { 0 };
            prop_assert_eq!(w.len(), expected);
            for win_ in &w {
                prop_assert!((win_.t_end - win_.t_start - win as f64 / fs).abs() < 1e-9);
            }
        }
    }
}
