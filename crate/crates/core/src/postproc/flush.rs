use super::refine::{avg_from, check_region, place_end, place_start, try_merge};
use super::{CoughRegion, PhysioConstants, MODULE};
use crate::error::{Error, Result};

/// Streaming refinement. Raw regions are pushed as windows are segmented and
/// `flush(h)` emits every cough whose refined boundaries can no longer change,
/// given that all later pushes have peaks at or after `h`.
///
/// Kept back after a flush: merge groups that a later peak could still join,
/// and the last emitted candidate whose successor is unknown and lies closer
/// than `max(t_max_cough_dur, 2 * avg_bound)`. With a pinned peak-to-end
/// average the output equals single-shot [`refine_regions`] on the union of
/// all pushes. Otherwise the average is a running value over emitted coughs.
///
/// [`refine_regions`]: super::refine_regions
#[derive(Debug, Clone)]
pub struct FlushAccumulator {
    c: PhysioConstants,
    pending: Vec<CoughRegion>,
    horizon: f64,
    prev_peak: Option<f64>,
    next_k: u32,
    gap_sum: f64,
    gap_count: usize,
    emitted: usize,
}

struct Group {
    region: CoughRegion,
    members: usize,
    first_peak: f64,
}

impl FlushAccumulator {
    pub fn new(c: PhysioConstants) -> Result<Self> {
        c.validate()?;
        Ok(Self {
            c,
            pending: Vec::new(),
            horizon: f64::NEG_INFINITY,
            prev_peak: None,
            next_k: 0,
            gap_sum: 0.0,
            gap_count: 0,
            emitted: 0,
        })
    }

    pub fn constants(&self) -> &PhysioConstants {
        &self.c
    }

    /// Coughs emitted so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn push(&mut self, r: CoughRegion) -> Result<()> {
        check_region(&r)?;
        if r.t_peak < self.horizon {
            return Err(Error::invalid(
                MODULE,
                format!("region peak {} precedes flushed horizon {}", r.t_peak, self.horizon),
            ));
        }
        let at = self.pending.partition_point(|p| p.t_peak <= r.t_peak);
        self.pending.insert(at, r);
        Ok(())
    }

    pub fn extend(&mut self, regions: impl IntoIterator<Item = CoughRegion>) -> Result<()> {
        regions.into_iter().try_for_each(|r| self.push(r))
    }

    /// Emits finalized coughs, promising that later pushes peak at or after `h`.
    pub fn flush(&mut self, h: f64) -> Result<Vec<CoughRegion>> {
        if h.is_nan() || h < self.horizon {
            return Err(Error::invalid(
                MODULE,
                format!("flush horizon {h} is before previous horizon {}", self.horizon),
            ));
        }
        self.horizon = h;
        let c = self.c;
        let n_pre = self.pending.partition_point(|r| r.t_peak < h);

        let mut groups: Vec<Group> = Vec::new();
        for r in &self.pending[..n_pre] {
            if let Some(g) = groups.last_mut() {
                if try_merge(&mut g.region, r, &c) {
                    g.members += 1;
                    continue;
                }
            }
            groups.push(Group {
                region: *r,
                members: 1,
                first_peak: r.t_peak,
            });
        }

        let n_final = match groups.last() {
            None => 0,
            Some(g) if g.region.t_peak <= h - c.t_min_cough_dur => groups.len(),
            Some(_) => groups.len() - 1,
        };
        let margin = c.t_max_cough_dur.max(2.0 * c.avg_bound());
        let mut n_out = 0;
        while n_out < n_final {
            let i = n_out;
            if i + 1 >= n_final {
                let follower = groups.get(i + 1).map_or(h, |g| g.first_peak);
                if follower - groups[i].region.t_peak < margin {
                    break;
                }
            }
            n_out += 1;
        }
        if n_out == 0 {
            return Ok(Vec::new());
        }

        let avg = match c.pk_to_end_avg {
            Some(a) => a,
            None => {
                let mut prev = self.prev_peak;
                for g in &groups[..n_out] {
                    if let Some(p) = prev {
                        let gap = g.region.t_peak - p;
                        if gap < c.t_max_cough_dur {
                            self.gap_sum += gap;
                            self.gap_count += 1;
                        }
                    }
                    prev = Some(g.region.t_peak);
                }
                avg_from(self.gap_sum, self.gap_count, &c)
            }
        };

        let mut out = Vec::with_capacity(n_out);
        let mut consumed = 0;
        for i in 0..n_out {
            let g = &groups[i].region;
            let start = place_start(g, self.prev_peak, &c);
            let next = (i + 1 < n_final).then(|| {
                let n = &groups[i + 1].region;
                (place_start(n, Some(g.t_peak), &c), n.t_peak)
            });
            let (end, nk) = place_end(g.t_peak, self.next_k, avg, next, &c);
            out.push(CoughRegion {
                t_start: start,
                t_peak: g.t_peak,
                t_end: end,
                amplitude: g.amplitude,
            });
            self.next_k = nk;
            self.prev_peak = Some(g.t_peak);
            consumed += groups[i].members;
        }
        self.pending.drain(..consumed);
        self.emitted += out.len();
        Ok(out)
    }

    /// Flushes everything at end of stream.
    pub fn finish(&mut self) -> Result<Vec<CoughRegion>> {
        self.flush(f64::INFINITY)
    }
}
