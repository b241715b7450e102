//! Event-based scoring, segment labeling and feature separability.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AnnotationSet, Interval};

const MODULE: &str = "eval";

/// Boundary tolerance of event matching, in seconds.
pub const MATCH_TOLERANCE_S: f64 = 0.25;
/// Bins of the pooled histograms used for separability.
pub const JSD_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventMatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// (prediction index, truth index) of each true positive.
    pub pairs: Vec<(usize, usize)>,
}

fn check_ordered(events: &[Interval], what: &str) -> Result<()> {
    for (i, e) in events.iter().enumerate() {
        if !(e.start.is_finite() && e.end.is_finite()) || e.start > e.end {
            return Err(Error::invalid(MODULE, format!("{what} event {i} is malformed: [{}, {}]", e.start, e.end)));
        }
    }
    if let Some(i) = events.windows(2).position(|w| w[1].start < w[0].start) {
        return Err(Error::invalid(MODULE, format!("{what} events are not time-ordered at index {}", i + 1)));
    }
    Ok(())
}

/// Both boundaries of `p` lie within `t` widened by `tol` on each side.
pub fn within_tolerance(p: &Interval, t: &Interval, tol: f64) -> bool {
    let lo = t.start - tol;
    let hi = t.end + tol;
    p.start >= lo && p.start <= hi && p.end >= lo && p.end <= hi
}

/// Greedy one-to-one matching in time order. Each prediction takes the
/// earliest unmatched truth it falls within tolerance of.
pub fn match_events(pred: &[Interval], truth: &[Interval], tol: f64) -> Result<EventMatchResult> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid(MODULE, format!("tolerance must be non-negative, got {tol}")));
    }
    check_ordered(pred, "predicted")?;
    check_ordered(truth, "ground-truth")?;
    let mut used = vec![false; truth.len()];
    let mut first = 0;
    let mut pairs = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        // truths ending before this start minus tolerance are out of reach
        // for this and every later prediction
        while first < truth.len() && truth[first].end + tol < p.start {
            first += 1;
        }
        for j in first..truth.len() {
            if truth[j].start - tol > p.start {
                break;
            }
            if !used[j] && within_tolerance(p, &truth[j], tol) {
                used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    let tp = pairs.len();
    Ok(EventMatchResult {
        tp,
        fp: pred.len() - tp,
        fn_: truth.len() - tp,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub se: f64,
    pub pr: f64,
    pub f1: f64,
    pub fp_per_hour: f64,
    pub duration_h: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// False when there is no ground truth and `se` is reported as 0.
    pub se_defined: bool,
    /// False when there are no predictions and `pr` is reported as 0.
    pub pr_defined: bool,
}

pub fn f1_score(se: f64, pr: f64) -> f64 {
    if se + pr > 0.0 {
        2.0 * se * pr / (se + pr)
    } else {
        0.0
    }
}

pub fn metrics_from_counts(tp: usize, fp: usize, fn_: usize, duration_h: f64) -> Result<MetricReport> {
    if !(duration_h > 0.0 && duration_h.is_finite()) {
        return Err(Error::invalid(MODULE, format!("duration must be positive, got {duration_h} h")));
    }
    let se_defined = tp + fn_ > 0;
    let pr_defined = tp + fp > 0;
    let se = if se_defined { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let pr = if pr_defined { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    Ok(MetricReport {
        se,
        pr,
        f1: f1_score(se, pr),
        fp_per_hour: fp as f64 / duration_h,
        duration_h,
        tp,
        fp,
        fn_,
        se_defined,
        pr_defined,
    })
}

pub fn metrics(result: &EventMatchResult, duration_h: f64) -> Result<MetricReport> {
    metrics_from_counts(result.tp, result.fp, result.fn_, duration_h)
}

/// Length of the union of `events` clipped to `w`.
fn covered(w: &Interval, events: &[Interval]) -> f64 {
    let mut total = 0.0;
    let mut reach = w.start;
    for e in events {
        let s = e.start.max(reach);
        let t = e.end.min(w.end);
        if t > s {
            total += t - s;
            reach = t;
        }
    }
    total
}

/// Training labels: a window is positive when coughs cover more than half of
/// it, or when more than half of some single cough lies inside it.
pub fn label_segments(windows: &[Interval], truth: &AnnotationSet) -> Vec<bool> {
    windows
        .iter()
        .map(|w| {
            let dur = w.duration();
            if dur <= 0.0 {
                return false;
            }
            if covered(w, &truth.events) > 0.5 * dur {
                return true;
            }
            truth.events.iter().any(|e| e.overlap(w) > 0.5 * e.duration())
        })
        .collect()
}

fn normalized(h: &[f64], what: &str) -> Result<Vec<f64>> {
    if let Some(v) = h.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid(MODULE, format!("histogram {what} has invalid entry {v}")));
    }
    let mass: f64 = h.iter().sum();
    if mass <= 0.0 {
        return Err(Error::invalid(MODULE, format!("histogram {what} has zero mass")));
    }
    Ok(h.iter().map(|v| v / mass).collect())
}

fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// Jensen-Shannon divergence in nats of two histograms over the same bins.
pub fn js_divergence(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(MODULE, format!("histogram lengths differ: {} vs {}", a.len(), b.len())));
    }
    let a = normalized(a, "a")?;
    let b = normalized(b, "b")?;
    let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
    let d = shannon(&m) - 0.5 * (shannon(&a) + shannon(&b));
    Ok(d.clamp(0.0, std::f64::consts::LN_2))
}

/// Histograms of two samples over `n_bins` equal-width bins spanning their
/// pooled range. A degenerate range puts everything in the first bin.
pub fn pooled_histograms(a: &[f64], b: &[f64], n_bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_bins == 0 {
        return Err(Error::invalid(MODULE, "n_bins must be positive"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid(MODULE, "non-finite sample value"));
    }
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let bin = |v: f64| {
        if width > 0.0 {
            (((v - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        }
    };
    let mut ha = vec![0.0; n_bins];
    let mut hb = vec![0.0; n_bins];
    for &v in a {
        ha[bin(v)] += 1.0;
    }
    for &v in b {
        hb[bin(v)] += 1.0;
    }
    Ok((ha, hb))
}

/// Separability of one feature between the cough and non-cough samples.
pub fn separability(cough: &[f64], non_cough: &[f64]) -> Result<f64> {
    if cough.is_empty() || non_cough.is_empty() {
        return Err(Error::invalid(MODULE, "separability needs samples of both classes"));
    }
    let (a, b) = pooled_histograms(cough, non_cough, JSD_BINS)?;
    js_divergence(&a, &b)
}

/// One scored recording.
#[derive(Debug, Clone)]
pub struct ScoredSession<'a> {
    pub pred: &'a [Interval],
    pub truth: &'a AnnotationSet,
    pub duration_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(flatten)]
    pub overall: MetricReport,
    /// Per noise scenario, pooled over the recordings carrying that tag.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub scenarios: IndexMap<String, MetricReport>,
}

/// Pools match counts over sessions, overall and per scenario tag.
pub fn score_sessions(sessions: &[ScoredSession], tol: f64) -> Result<ScoreReport> {
    let mut total = (0, 0, 0, 0.0);
    let mut by_tag: IndexMap<String, (usize, usize, usize, f64)> = IndexMap::new();
    for s in sessions {
        let r = match_events(s.pred, &s.truth.events, tol)?;
        if !(s.duration_h > 0.0) {
            return Err(Error::invalid(MODULE, format!("duration must be positive, got {} h", s.duration_h)));
        }
        let add = |acc: &mut (usize, usize, usize, f64)| {
            acc.0 += r.tp;
            acc.1 += r.fp;
            acc.2 += r.fn_;
            acc.3 += s.duration_h;
        };
        add(&mut total);
        if let Some(tag) = &s.truth.scenario {
            add(by_tag.entry(tag.clone()).or_default());
        }
    }
    let overall = metrics_from_counts(total.0, total.1, total.2, total.3)?;
    let mut scenarios = IndexMap::new();
    for (tag, c) in by_tag {
        scenarios.insert(tag, metrics_from_counts(c.0, c.1, c.2, c.3)?);
    }
    scenarios.sort_keys();
    Ok(ScoreReport { overall, scenarios })
}
