//! Helpers shared by the integration test binaries.

use coughe::scheduler::{ExecutionTrace, Mode, SchedulerConfig};
use coughe::Modality;

const EPS: f64 = 1e-9;

fn lattice_point_at_or_after(hop: f64, t: f64) -> f64 {
    // smallest k*hop >= t, by scanning (independent of the scheduler's formula)
    let mut x = 0.0;
    let mut k = 0u32;
    while x < t - EPS {
        k += 1;
        x = k as f64 * hop;
    }
    x
}

/// Every invariant a multimodal trace must satisfy; returns the first violation.
pub fn check_trace(t: &ExecutionTrace, c: &SchedulerConfig) -> Result<(), String> {
    let e = &t.entries;
    for run in t.audio_runs() {
        if run.len > c.n_windows_max {
            return Err(format!("run of {} > {}", run.len, c.n_windows_max));
        }
        let last = &e[run.first + run.len - 1];
        if run.len < c.n_windows_max && last.is_cough() && run.first + run.len < e.len() {
            return Err(format!("sub-max run at {} ended on cough", run.first));
        }
        for k in 0..run.len - 1 {
            if !e[run.first + k].is_cough() {
                return Err("run continued after non-cough".into());
            }
            let gap = e[run.first + k + 1].t_start - e[run.first + k].t_start;
            if (gap - c.audio_hop_s).abs() > EPS {
                return Err(format!("audio hop {gap}"));
            }
        }
        if run.first == 0 {
            return Err("trace starts with audio".into());
        }
        let trig = &e[run.first - 1];
        if trig.model != Modality::Kinematic || !trig.is_cough() {
            return Err("audio run without kinematic trigger".into());
        }
        let anchor = match c.mode {
            Mode::Rerun => trig.t_start,
            Mode::NoRerun => trig.t_end,
        };
        if (e[run.first].t_start - anchor).abs() > EPS {
            return Err(format!("anchor {} != {anchor}", e[run.first].t_start));
        }
        if let Some(next) = e.get(run.first + run.len) {
            let want = lattice_point_at_or_after(c.kin_hop_s, last.t_end);
            if (next.t_start - want).abs() > 1e-7 {
                return Err(format!("resumed at {} instead of {want}", next.t_start));
            }
        }
    }
    for w in e.windows(2) {
        if w[0].model == Modality::Kinematic && w[1].model == Modality::Kinematic {
            if w[0].is_cough() {
                return Err("kinematic cough not followed by audio".into());
            }
            if (w[1].t_start - w[0].t_start - c.kin_hop_s).abs() > 1e-7 {
                return Err("kinematic lattice skipped".into());
            }
        }
        if w[1].t_start < w[0].t_start - EPS {
            return Err("time went backwards".into());
        }
    }
    Ok(())
}
