//! Slow, obviously-correct reference implementations. They share no code with
//! the routines they check.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

/// O(n²) discrete Fourier transform of a real sequence.
pub fn dft_naive(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                // reduce the phase index first to keep the angle small
                let idx = (k * t) % n;
                let ang = -2.0 * PI * idx as f64 / n as f64;
                acc += Complex64::new(v * ang.cos(), v * ang.sin());
            }
            acc
        })
        .collect()
}

/// Recursive Douglas-Peucker with vertical deviation; lowest index wins ties.
pub fn douglas_peucker_recursive(y: &[f64], epsilon: f64) -> Vec<usize> {
    fn rec(y: &[f64], lo: usize, hi: usize, eps: f64, keep: &mut Vec<bool>) {
        if hi <= lo + 1 {
            return;
        }
        let mut best = lo;
        let mut best_d = -1.0;
        for i in lo + 1..hi {
            let frac = (i - lo) as f64 / (hi - lo) as f64;
            let line = y[lo] + (y[hi] - y[lo]) * frac;
            let d = (y[i] - line).abs();
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d > eps {
            keep[best] = true;
            rec(y, lo, best, eps, keep);
            rec(y, best, hi, eps, keep);
        }
    }
    if y.len() < 2 {
        return (0..y.len()).collect();
    }
    let mut keep = vec![false; y.len()];
    keep[0] = true;
    keep[y.len() - 1] = true;
    rec(y, 0, y.len() - 1, epsilon, &mut keep);
    keep.iter().enumerate().filter(|(_, k)| **k).map(|(i, _)| i).collect()
}

/// Match counts from a maximum-cardinality bipartite matching under the same
/// tolerance predicate the greedy matcher uses. Returns (tp, fp, fn).
///
/// Augmenting-path search over every prediction, so the result is optimal
/// regardless of ordering.
pub fn event_match_exhaustive(pred: &[(f64, f64)], truth: &[(f64, f64)], tol: f64) -> (usize, usize, usize) {
    let ok = |p: (f64, f64), t: (f64, f64)| {
        let lo = t.0 - tol;
        let hi = t.1 + tol;
        p.0 >= lo && p.0 <= hi && p.1 >= lo && p.1 <= hi
    };
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|&p| (0..truth.len()).filter(|&j| ok(p, truth[j])).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; truth.len()];

    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none() || augment(owner[j].unwrap(), adj, seen, owner) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }

    let mut tp = 0;
    for i in 0..pred.len() {
        let mut seen = vec![false; truth.len()];
        if augment(i, &adj, &mut seen, &mut owner) {
            tp += 1;
        }
    }
    (tp, pred.len() - tp, truth.len() - tp)
}

/// Indices of points not dominated by any other, where each point is
/// (score to maximize, cost to minimize).
pub fn dominance_naive(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let (fi, ei) = points[i];
            !points.iter().enumerate().any(|(j, &(fj, ej))| {
                j != i && fj >= fi && ej <= ei && (fj > fi || ej < ei)
            })
        })
        .collect()
}
