//! Scalar statistics shared by the audio and kinematic extractors.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Neighbouring samples whose `x >= 0` predicate differs.
pub fn sign_changes(x: &[f64]) -> usize {
    x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count()
}

pub fn zcr(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    sign_changes(x) as f64 / (x.len() - 1) as f64
}

/// max|x| / rms; 0 for an all-zero input.
pub fn crest(x: &[f64]) -> f64 {
    let r = rms(x);
    if r == 0.0 {
        return 0.0;
    }
    x.iter().fold(0.0f64, |m, v| m.max(v.abs())) / r
}

/// Fisher kurtosis m4 / m2² − 3; 0 when the variance is zero.
pub fn kurtosis(x: &[f64]) -> f64 {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return 0.0;
    }
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

pub fn line_length(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Shannon entropy (natural log) of |x| normalised to unit sum; 0 if all zero.
pub fn entropy(x: &[f64]) -> f64 {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if !(total > 0.0) || !total.is_finite() {
        return 0.0;
    }
    -x.iter()
        .map(|v| v.abs() / total)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_signal() {
        let x = [-0.5; 40];
        assert_eq!(rms(&x), 0.5);
        assert_eq!(zcr(&x), 0.0);
        assert_eq!(crest(&x), 1.0);
        assert_eq!(line_length(&x), 0.0);
        assert_eq!(kurtosis(&x), 0.0);
    }

    #[test]
    fn alternating_signal() {
        let x: Vec<f64> = (0..11).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(line_length(&x), 20.0);
        assert_eq!(sign_changes(&x), 10);
    }

    #[test]
    fn zero_signal_crest_is_zero() {
        assert_eq!(crest(&[0.0; 8]), 0.0);
    }

    #[test]
    fn entropy_uniform_and_one_hot() {
        assert!((entropy(&[2.0; 10]) - 10f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&[0.0, 3.0, 0.0]), 0.0);
        assert_eq!(entropy(&[0.0; 4]), 0.0);
    }

    proptest! {
        #[test]
        fn kurtosis_matches_moment_oracle(x in prop::collection::vec(-10.0f64..10.0, 4..200)) {
            // two-pass oracle with an explicit loop
            let n = x.len() as f64;
            let mut s = 0.0;
            for v in &x { s += v; }
            let mu = s / n;
            let (mut s2, mut s4) = (0.0, 0.0);
            for v in &x {
                let d = v - mu;
                s2 += d * d;
                s4 += d * d * d * d;
            }
            let (m2, m4) = (s2 / n, s4 / n);
            let expected = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };
            prop_assert!((kurtosis(&x) - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }
}
