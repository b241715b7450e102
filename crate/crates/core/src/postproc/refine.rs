use super::{CoughRegion, PhysioConstants, MODULE};
use crate::error::{Error, Result};

pub(super) fn check_region(r: &CoughRegion) -> Result<()> {
    let finite = r.t_start.is_finite() && r.t_peak.is_finite() && r.t_end.is_finite();
    if !finite || r.t_start > r.t_peak || r.t_peak > r.t_end || !(r.amplitude >= 0.0) {
        return Err(Error::invalid(MODULE, format!("malformed region {r:?}")));
    }
    Ok(())
}

/// Folds `r` into `last` when their peaks are closer than the minimum cough
/// duration. The louder peak survives (the earlier one on ties) and the spans
/// are united.
pub(super) fn try_merge(last: &mut CoughRegion, r: &CoughRegion, c: &PhysioConstants) -> bool {
    if r.t_peak - last.t_peak >= c.t_min_cough_dur {
        return false;
    }
    if r.amplitude > last.amplitude {
        last.t_peak = r.t_peak;
        last.amplitude = r.amplitude;
    }
    last.t_start = last.t_start.min(r.t_start);
    last.t_end = last.t_end.max(r.t_end);
    true
}

/// Merge pass over regions sorted by peak time.
pub fn merge_close_peaks(regions: &[CoughRegion], c: &PhysioConstants) -> Vec<CoughRegion> {
    let mut out: Vec<CoughRegion> = Vec::with_capacity(regions.len());
    for r in regions {
        let merged = out.last_mut().is_some_and(|last| try_merge(last, r, c));
        if !merged {
            out.push(*r);
        }
    }
    out
}

/// Mean in-bout peak gap minus the shortest spike. Falls back to
/// `fallback_pk_to_end` when no two peaks are within `t_max_cough_dur`.
pub fn avg_peak_to_end(peaks: &[f64], c: &PhysioConstants) -> Result<f64> {
    if peaks.is_empty() {
        return Err(Error::invalid(MODULE, "no peaks to average"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for w in peaks.windows(2) {
        let gap = w[1] - w[0];
        if gap < c.t_max_cough_dur {
            sum += gap;
            n += 1;
        }
    }
    Ok(avg_from(sum, n, c))
}

pub(super) fn avg_from(sum: f64, n: usize, c: &PhysioConstants) -> f64 {
    if n == 0 {
        c.fallback_pk_to_end
    } else {
        sum / n as f64 - c.t_min_spike
    }
}

/// Start after clamping to the midpoint with the previous peak and enforcing
/// the minimum lead before the peak.
pub(super) fn place_start(r: &CoughRegion, prev_peak: Option<f64>, c: &PhysioConstants) -> f64 {
    let mut s = r.t_start;
    if let Some(p) = prev_peak {
        s = s.max((p + r.t_peak) / 2.0);
    }
    if r.t_peak - s < c.t_min_before_pk {
        s = r.t_peak - c.t_min_before_pk;
    }
    s
}

/// End of a cough at bout position `k`, given the following cough's refined
/// start and peak. Returns the end and the bout position of the follower.
pub(super) fn place_end(
    peak: f64,
    k: u32,
    avg: f64,
    next: Option<(f64, f64)>,
    c: &PhysioConstants,
) -> (f64, u32) {
    let decayed = peak + avg * c.decay_base.powi(k as i32);
    match next {
        Some((ns, np)) if np - peak < c.t_max_cough_dur => (ns, k + 1),
        Some((ns, _)) => (decayed.min(ns), 0),
        None => (decayed, 0),
    }
}

/// Full refinement of one session's raw regions.
pub fn refine_regions(regions: &[CoughRegion], c: &PhysioConstants) -> Result<Vec<CoughRegion>> {
    c.validate()?;
    for r in regions {
        check_region(r)?;
    }
    let mut sorted = regions.to_vec();
    sorted.sort_by(|a, b| a.t_peak.total_cmp(&b.t_peak));
    let merged = merge_close_peaks(&sorted, c);
    if merged.is_empty() {
        return Ok(merged);
    }
    let avg = match c.pk_to_end_avg {
        Some(a) => a,
        None => avg_peak_to_end(&merged.iter().map(|r| r.t_peak).collect::<Vec<_>>(), c)?,
    };
    let starts: Vec<f64> = (0..merged.len())
        .map(|i| place_start(&merged[i], i.checked_sub(1).map(|j| merged[j].t_peak), c))
        .collect();
    let mut k = 0;
    let mut out = Vec::with_capacity(merged.len());
    for i in 0..merged.len() {
        let next = merged.get(i + 1).map(|n| (starts[i + 1], n.t_peak));
        let (end, nk) = place_end(merged[i].t_peak, k, avg, next, c);
        k = nk;
        out.push(CoughRegion {
            t_start: starts[i],
            t_peak: merged[i].t_peak,
            t_end: end,
            amplitude: merged[i].amplitude,
        });
    }
    Ok(out)
}
