//! Trace-driven energy and runtime estimation, threshold sweeps and Pareto
//! front extraction.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Modality;
use crate::scheduler::{ExecutionTrace, Mode, SchedulerConfig};

const MODULE: &str = "simkit";

/// Measured totals over the whole test set, in joules.
pub const REFERENCE_AUDIO_TOTAL_J: f64 = 36.99;
pub const REFERENCE_KINEMATIC_TOTAL_J: f64 = 2.76;
pub const REFERENCE_MULTIMODAL_TOTAL_J: f64 = 10.89;
/// Assumed test-set length: 5 subjects at the 16 min per subject of the
/// training recordings (4 h over 15 subjects).
pub const TEST_SET_DURATION_S: f64 = 4800.0;
/// Audio model duty cycle with the 84-feature mask.
pub const AUDIO_DUTY_CYCLE: f64 = 0.2362;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCost {
    pub energy_j: f64,
    pub runtime_s: f64,
}

/// Per-window costs of each model plus optional idle power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<ModelCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinematic: Option<ModelCost>,
    #[serde(default)]
    pub idle_w: f64,
}

impl Default for CostTable {
    /// Per-window costs derived from the measured test-set totals divided by
    /// the number of windows each model runs over [`TEST_SET_DURATION_S`]
    /// at the default hops (0.4 s audio, 0.25 s kinematic). The audio runtime
    /// is the duty cycle times the hop; the kinematic runtime assumes the
    /// same average power as the audio model.
    fn default() -> Self {
        let cfg = SchedulerConfig::default();
        let n_audio = (TEST_SET_DURATION_S / cfg.audio_hop_s).round();
        let n_kin = (TEST_SET_DURATION_S / cfg.kin_hop_s).round();
        let audio = ModelCost {
            energy_j: REFERENCE_AUDIO_TOTAL_J / n_audio,
            runtime_s: AUDIO_DUTY_CYCLE * cfg.audio_hop_s,
        };
        let kin_energy = REFERENCE_KINEMATIC_TOTAL_J / n_kin;
        Self {
            audio: Some(audio),
            kinematic: Some(ModelCost {
                energy_j: kin_energy,
                runtime_s: audio.runtime_s * kin_energy / audio.energy_j,
            }),
            idle_w: 0.0,
        }
    }
}

impl CostTable {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("audio", self.audio), ("kinematic", self.kinematic)] {
            if let Some(c) = c {
                if !(c.energy_j >= 0.0 && c.runtime_s >= 0.0 && c.energy_j.is_finite() && c.runtime_s.is_finite()) {
                    return Err(Error::config(MODULE, format!("{name} costs must be non-negative and finite")));
                }
            }
        }
        if !(self.idle_w >= 0.0 && self.idle_w.is_finite()) {
            return Err(Error::config(MODULE, "idle_w must be non-negative"));
        }
        Ok(())
    }

    pub fn get(&self, m: Modality) -> Option<ModelCost> {
        match m {
            Modality::Audio => self.audio,
            Modality::Kinematic => self.kinematic,
        }
    }

    pub fn from_json_str(s: &str, origin: &str) -> Result<Self> {
        let t: CostTable = serde_json::from_str(s)
            .map_err(|e| Error::parse(MODULE, origin, format!("line {} column {}: {e}", e.line(), e.column())))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(MODULE, path, e))?;
        Self::from_json_str(&s, &path.display().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub energy_j: f64,
    pub runtime_s: f64,
    pub audio_energy_j: f64,
    pub kinematic_energy_j: f64,
    pub idle_energy_j: f64,
    pub audio_count: usize,
    pub kinematic_count: usize,
    pub audio_share: f64,
    pub kinematic_share: f64,
}

/// Sums per-window costs over a trace. Idle power is charged for the part of
/// the trace duration not covered by model runtime.
pub fn estimate(trace: &ExecutionTrace, costs: &CostTable) -> Result<EnergyEstimate> {
    costs.validate()?;
    let na = trace.count(Modality::Audio);
    let nk = trace.count(Modality::Kinematic);
    let cost = |m: Modality, n: usize| -> Result<ModelCost> {
        match costs.get(m) {
            Some(c) => Ok(c),
            None if n == 0 => Ok(ModelCost { energy_j: 0.0, runtime_s: 0.0 }),
            None => Err(Error::config(MODULE, format!("cost table has no entry for the {m} model used by the trace"))),
        }
    };
    let ca = cost(Modality::Audio, na)?;
    let ck = cost(Modality::Kinematic, nk)?;
    let audio_energy_j = na as f64 * ca.energy_j;
    let kinematic_energy_j = nk as f64 * ck.energy_j;
    let busy = na as f64 * ca.runtime_s + nk as f64 * ck.runtime_s;
    let idle_energy_j = costs.idle_w * (trace.duration_s - busy).max(0.0);
    Ok(EnergyEstimate {
        energy_j: audio_energy_j + kinematic_energy_j + idle_energy_j,
        runtime_s: busy,
        audio_energy_j,
        kinematic_energy_j,
        idle_energy_j,
        audio_count: na,
        kinematic_count: nk,
        audio_share: trace.share_percent(Modality::Audio),
        kinematic_share: trace.share_percent(Modality::Kinematic),
    })
}

/// Relative saving of `candidate` over `reference`, in percent.
pub fn saving_percent(reference_j: f64, candidate_j: f64) -> Result<f64> {
    if !(reference_j > 0.0) || !(candidate_j >= 0.0) {
        return Err(Error::invalid(
            MODULE,
            format!("saving needs a positive reference and non-negative candidate, got {reference_j} and {candidate_j}"),
        ));
    }
    Ok((1.0 - candidate_j / reference_j) * 100.0)
}

/// Cartesian grid of scheduler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub modes: Vec<Mode>,
    pub n_windows_max: Vec<usize>,
    pub th_kin: Vec<f64>,
    pub th_audio: Vec<f64>,
}

/// 0.05, 0.10, ..., 0.50.
pub fn default_thresholds() -> Vec<f64> {
    (1..=10).map(|i| (i * 5) as f64 / 100.0).collect()
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            modes: vec![Mode::Rerun],
            n_windows_max: vec![4],
            th_kin: default_thresholds(),
            th_audio: default_thresholds(),
        }
    }
}

impl SweepGrid {
    pub fn single(config: &SchedulerConfig) -> Self {
        Self {
            modes: vec![config.mode],
            n_windows_max: vec![config.n_windows_max],
            th_kin: vec![config.th_kin],
            th_audio: vec![config.th_audio],
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len() * self.n_windows_max.len() * self.th_kin.len() * self.th_audio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points over `base`; window settings come from `base`.
    pub fn points(&self, base: &SchedulerConfig) -> Vec<SchedulerConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &mode in &self.modes {
            for &n in &self.n_windows_max {
                for &tk in &self.th_kin {
                    for &ta in &self.th_audio {
                        out.push(SchedulerConfig {
                            mode,
                            n_windows_max: n,
                            th_kin: tk,
                            th_audio: ta,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

/// Outcome of running one recording under one scheduler setting.
#[derive(Debug, Clone)]
pub struct SessionEval {
    pub trace: ExecutionTrace,
    pub f1: f64,
}

/// A recording that can be replayed under arbitrary scheduler settings.
pub trait SweepSession: Sync {
    fn evaluate(&self, config: &SchedulerConfig) -> Result<SessionEval>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: Mode,
    pub n_windows_max: usize,
    pub th_kin: f64,
    pub th_audio: f64,
    /// Mean F1 over sessions.
    pub f1: f64,
    /// Total energy over sessions.
    pub energy_j: f64,
    pub audio_share: f64,
    pub kinematic_share: f64,
}

fn run_point<S: SweepSession>(sessions: &[S], config: &SchedulerConfig, costs: &CostTable) -> Result<SweepRow> {
    let mut f1 = 0.0;
    let mut energy = 0.0;
    let mut na = 0;
    let mut nk = 0;
    for s in sessions {
        let ev = s.evaluate(config)?;
        let est = estimate(&ev.trace, costs)?;
        f1 += ev.f1;
        energy += est.energy_j;
        na += est.audio_count;
        nk += est.kinematic_count;
    }
    let total = (na + nk) as f64;
    let share = |n: usize| if total > 0.0 { 100.0 * n as f64 / total } else { 0.0 };
    Ok(SweepRow {
        mode: config.mode,
        n_windows_max: config.n_windows_max,
        th_kin: config.th_kin,
        th_audio: config.th_audio,
        f1: f1 / sessions.len() as f64,
        energy_j: energy,
        audio_share: share(na),
        kinematic_share: share(nk),
    })
}

fn mode_rank(m: Mode) -> u8 {
    match m {
        Mode::Rerun => 0,
        Mode::NoRerun => 1,
    }
}

/// Runs every grid point and returns rows in canonical order (mode,
/// n_windows_max, th_kin, th_audio), whatever the grid's enumeration order.
/// `jobs` bounds the worker threads; `None` uses rayon's default.
pub fn sweep<S: SweepSession>(
    sessions: &[S],
    grid: &SweepGrid,
    base: &SchedulerConfig,
    costs: &CostTable,
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::invalid(MODULE, "sweep grid is empty"));
    }
    if sessions.is_empty() {
        return Err(Error::invalid(MODULE, "sweep needs at least one session"));
    }
    costs.validate()?;
    let points = grid.points(base);
    for p in &points {
        p.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(MODULE, format!("cannot start worker pool: {e}")))?;
    let mut rows = pool.install(|| {
        points
            .par_iter()
            .map(|p| run_point(sessions, p, costs))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by(|a, b| {
        mode_rank(a.mode)
            .cmp(&mode_rank(b.mode))
            .then(a.n_windows_max.cmp(&b.n_windows_max))
            .then(a.th_kin.total_cmp(&b.th_kin))
            .then(a.th_audio.total_cmp(&b.th_audio))
    });
    Ok(rows)
}

/// Indices (ascending) of points not dominated under (score maximize, cost
/// minimize). Exact ties are all kept.
pub fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].0.total_cmp(&points[a].0).then(points[a].1.total_cmp(&points[b].1)));
    let mut keep = Vec::new();
    let mut best = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let score = points[order[i]].0;
        let group_min = points[order[i]].1;
        let mut j = i;
        while j < order.len() && points[order[j]].0 == score {
            if points[order[j]].1 == group_min && group_min < best {
                keep.push(order[j]);
            }
            j += 1;
        }
        best = best.min(group_min);
        i = j;
    }
    keep.sort_unstable();
    keep
}

/// Non-dominated rows under (F1 maximize, energy minimize).
pub fn pareto_front(rows: &[SweepRow]) -> Vec<usize> {
    pareto_indices(&rows.iter().map(|r| (r.f1, r.energy_j)).collect::<Vec<_>>())
}

pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "mode",
    "n_windows_max",
    "th_kin",
    "th_audio",
    "f1",
    "energy_j",
    "audio_share",
    "kinematic_share",
];

/// Writes sweep rows as CSV, optionally with a trailing `pareto` 0/1 column.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], with_pareto: bool, w: W) -> Result<()> {
    let front = if with_pareto { pareto_front(rows) } else { Vec::new() };
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::invalid(MODULE, format!("writing sweep CSV: {e}"));
    let mut header: Vec<&str> = SWEEP_CSV_HEADER.to_vec();
    if with_pareto {
        header.push("pareto");
    }
    out.write_record(&header).map_err(err)?;
    for (i, r) in rows.iter().enumerate() {
        let mut rec = vec![
            r.mode.as_str().to_string(),
            r.n_windows_max.to_string(),
            r.th_kin.to_string(),
            r.th_audio.to_string(),
            r.f1.to_string(),
            r.energy_j.to_string(),
            r.audio_share.to_string(),
            r.kinematic_share.to_string(),
        ];
        if with_pareto {
            rec.push(if front.binary_search(&i).is_ok() { "1" } else { "0" }.to_string());
        }
        out.write_record(&rec).map_err(err)?;
    }
    out.flush().map_err(|e| Error::invalid(MODULE, format!("writing sweep CSV: {e}")))?;
    Ok(())
}
