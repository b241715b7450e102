//! Second-order IIR sections (RBJ cookbook designs).

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn from_raw(b0: f64, b1: f64, b2: f64, a0: f64, a1: f64, a2: f64) -> Self {
        Self {
            b: [b0 / a0, b1 / a0, b2 / a0],
            a: [a1 / a0, a2 / a0],
        }
    }

    pub fn lowpass(fs: f64, f0: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::from_raw((1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    pub fn highpass(fs: f64, f0: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::from_raw((1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    /// Direct form II transposed, zero initial state.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (mut z1, mut z2) = (0.0, 0.0);
        x.iter()
            .map(|&v| {
                let y = self.b[0] * v + z1;
                z1 = self.b[1] * v - self.a[0] * y + z2;
                z2 = self.b[2] * v - self.a[1] * y;
                y
            })
            .collect()
    }

    /// Magnitude response at frequency `f`.
    pub fn gain(&self, fs: f64, f: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (
            self.b[0] + self.b[1] * z1.0 + self.b[2] * z2.0,
            self.b[1] * z1.1 + self.b[2] * z2.1,
        );
        let den = (1.0 + self.a[0] * z1.0 + self.a[1] * z2.0, self.a[0] * z1.1 + self.a[1] * z2.1);
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }
}

/// Fourth-order band-pass: Butterworth high-pass at `lo` then low-pass at `hi`.
pub fn bandpass4(x: &[f64], fs: f64, lo: f64, hi: f64) -> Vec<f64> {
    let q = std::f64::consts::FRAC_1_SQRT_2;
    let hp = Biquad::highpass(fs, lo, q);
    let lp = Biquad::lowpass(fs, hi, q);
    lp.apply(&hp.apply(x))
}

/// Centered moving average of `width` samples; the window shrinks at the edges.
pub fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || width <= 1 {
        return x.to_vec();
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    let left = (width - 1) / 2;
    let right = width - 1 - left;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterworth_half_power_at_corner() {
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let lp = Biquad::lowpass(8000.0, 500.0, q);
        assert!((lp.gain(8000.0, 500.0) - q).abs() < 1e-9);
        assert!((lp.gain(8000.0, 0.0) - 1.0).abs() < 1e-12);
        let hp = Biquad::highpass(8000.0, 500.0, q);
        assert!((hp.gain(8000.0, 500.0) - q).abs() < 1e-9);
    }

    #[test]
    fn moving_average_of_constant() {
        let y = moving_average(&[3.0; 50], 20);
        assert!(y.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }
}
