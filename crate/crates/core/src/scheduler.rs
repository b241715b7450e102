//! Kinematic-triggers-audio state machine and execution traces.
//!
//! The kinematic model runs on a fixed lattice of windows. A kinematic cough
//! decision hands control to the audio model, which runs for consecutive
//! windows until it outputs non-cough or reaches `n_windows_max`, after which
//! the kinematic model resumes at the first lattice point at or after the end
//! of the last audio window.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dsp::audio::{AudioConfig, AudioExtractor};
use crate::dsp::kinematic::extract_kinematic_features;
use crate::error::{Error, Result};
use crate::inference::TreeEnsemble;
use crate::ingest::{AudioSignal, KinematicSignal, Modality, Signal, SubjectMeta, Window};
use crate::registry::FeatureMask;

const MODULE: &str = "scheduler";
/// Slack for lattice comparisons, in seconds.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The first audio window starts where the triggering kinematic window started.
    Rerun,
    /// The first audio window starts where the triggering kinematic window ended.
    NoRerun,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rerun => "rerun",
            Mode::NoRerun => "no_rerun",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub mode: Mode,
    pub n_windows_max: usize,
    pub th_kin: f64,
    pub th_audio: f64,
    pub audio_window_s: f64,
    pub audio_hop_s: f64,
    pub kin_window_s: f64,
    pub kin_hop_s: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Rerun,
            n_windows_max: 4,
            th_kin: 0.05,
            th_audio: 0.3,
            audio_window_s: 0.8,
            audio_hop_s: 0.4,
            kin_window_s: 0.5,
            kin_hop_s: 0.25,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, th) in [("th_kin", self.th_kin), ("th_audio", self.th_audio)] {
            if !(0.0..=1.0).contains(&th) {
                return Err(Error::config(MODULE, format!("{name} must lie in [0, 1], got {th}")));
            }
        }
        if self.n_windows_max == 0 {
            return Err(Error::config(MODULE, "n_windows_max must be at least 1"));
        }
        for (name, win, hop) in [
            ("audio", self.audio_window_s, self.audio_hop_s),
            ("kinematic", self.kin_window_s, self.kin_hop_s),
        ] {
            if !(win > 0.0 && hop > 0.0 && hop <= win && win.is_finite()) {
                return Err(Error::config(
                    MODULE,
                    format!("{name} window {win} s / hop {hop} s must satisfy 0 < hop <= window"),
                ));
            }
        }
        Ok(())
    }

    pub fn window_len(&self, m: Modality) -> f64 {
        match m {
            Modality::Audio => self.audio_window_s,
            Modality::Kinematic => self.kin_window_s,
        }
    }

    pub fn threshold(&self, m: Modality) -> f64 {
        match m {
            Modality::Audio => self.th_audio,
            Modality::Kinematic => self.th_kin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Cough,
    NonCough,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t_start: f64,
    pub t_end: f64,
    pub model: Modality,
    pub probability: f64,
    pub decision: Decision,
}

impl TraceEntry {
    pub fn is_cough(&self) -> bool {
        self.decision == Decision::Cough
    }
}

/// Machine state between windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerState {
    pub active_model: Modality,
    pub audio_run_len: usize,
    pub next_window_start: f64,
    /// Origin of the kinematic lattice.
    pub grid_origin: f64,
}

impl SchedulerState {
    pub fn new(origin: f64) -> Self {
        Self {
            active_model: Modality::Kinematic,
            audio_run_len: 0,
            next_window_start: origin,
            grid_origin: origin,
        }
    }
}

fn grid_at_or_after(origin: f64, hop: f64, t: f64) -> f64 {
    let k = ((t - origin) / hop - TIME_EPS).ceil().max(0.0);
    origin + k * hop
}

/// Consume the probability of the window at `state.next_window_start` for the
/// active model and return the next state with the trace entry.
pub fn step(state: &SchedulerState, config: &SchedulerConfig, p: f64) -> Result<(SchedulerState, TraceEntry)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(MODULE, format!("probability {p} outside [0, 1]")));
    }
    let model = state.active_model;
    let t_start = state.next_window_start;
    let t_end = t_start + config.window_len(model);
    let cough = p >= config.threshold(model);
    let entry = TraceEntry {
        t_start,
        t_end,
        model,
        probability: p,
        decision: if cough { Decision::Cough } else { Decision::NonCough },
    };
    let mut next = *state;
    match model {
        Modality::Kinematic => {
            if cough {
                next.active_model = Modality::Audio;
                next.audio_run_len = 0;
                next.next_window_start = match config.mode {
                    Mode::Rerun => t_start,
                    Mode::NoRerun => t_end,
                };
            } else {
                let k = ((t_start - state.grid_origin) / config.kin_hop_s).round();
                next.next_window_start = state.grid_origin + (k + 1.0) * config.kin_hop_s;
            }
        }
        Modality::Audio => {
            let run = state.audio_run_len + 1;
            if !cough || run >= config.n_windows_max {
                next.active_model = Modality::Kinematic;
                next.audio_run_len = 0;
                next.next_window_start = grid_at_or_after(state.grid_origin, config.kin_hop_s, t_end);
            } else {
                next.audio_run_len = run;
                next.next_window_start = t_start + config.audio_hop_s;
            }
        }
    }
    Ok((next, entry))
}

/// Ordered per-window record of model executions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub entries: Vec<TraceEntry>,
    pub duration_s: f64,
}

/// A maximal stretch of consecutive audio entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AudioRun {
    pub first: usize,
    pub len: usize,
}

impl ExecutionTrace {
    pub fn count(&self, m: Modality) -> usize {
        self.entries.iter().filter(|e| e.model == m).count()
    }

    /// Fraction of entries run by `m`, in percent.
    pub fn share_percent(&self, m: Modality) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        100.0 * self.count(m) as f64 / self.entries.len() as f64
    }

    pub fn audio_runs(&self) -> Vec<AudioRun> {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < self.entries.len() {
            if self.entries[i].model == Modality::Audio {
                let first = i;
                while i < self.entries.len() && self.entries[i].model == Modality::Audio {
                    i += 1;
                }
                runs.push(AudioRun { first, len: i - first });
            } else {
                i += 1;
            }
        }
        runs
    }

    /// Concatenate two traces; durations add.
    pub fn concat(&self, other: &ExecutionTrace) -> ExecutionTrace {
        ExecutionTrace {
            entries: self.entries.iter().chain(&other.entries).copied().collect(),
            duration_s: self.duration_s + other.duration_s,
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Read one entry per line. The session duration is taken as the span
    /// from the first start to the last end unless given.
    pub fn read_jsonl<R: BufRead>(r: R, origin: &str, duration_s: Option<f64>) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::parse(MODULE, origin, format!("line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: TraceEntry = serde_json::from_str(&line)
                .map_err(|e| Error::parse(MODULE, origin, format!("line {}: {e}", i + 1)))?;
            entries.push(e);
        }
        let span = match (entries.first(), entries.last()) {
            (Some(a), Some(b)) => b.t_end - a.t_start,
            _ => 0.0,
        };
        Ok(Self {
            entries,
            duration_s: duration_s.unwrap_or(span),
        })
    }
}

/// Supplies model probabilities for windows requested by the scheduler.
/// Returning `None` means the window lies beyond the end of the stream.
pub trait ProbabilitySource {
    fn kinematic_prob(&mut self, t_start: f64, t_end: f64) -> Result<Option<f64>>;
    fn audio_prob(&mut self, t_start: f64, t_end: f64) -> Result<Option<f64>>;

    fn prob(&mut self, m: Modality, t_start: f64, t_end: f64) -> Result<Option<f64>> {
        match m {
            Modality::Audio => self.audio_prob(t_start, t_end),
            Modality::Kinematic => self.kinematic_prob(t_start, t_end),
        }
    }
}

/// Pre-recorded probability queues, consumed in order.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProbabilities {
    kin: std::collections::VecDeque<f64>,
    audio: std::collections::VecDeque<f64>,
}

impl ScriptedProbabilities {
    pub fn new(kin: Vec<f64>, audio: Vec<f64>) -> Self {
        Self {
            kin: kin.into(),
            audio: audio.into(),
        }
    }
}

impl ProbabilitySource for ScriptedProbabilities {
    fn kinematic_prob(&mut self, _: f64, _: f64) -> Result<Option<f64>> {
        Ok(self.kin.pop_front())
    }

    fn audio_prob(&mut self, _: f64, _: f64) -> Result<Option<f64>> {
        Ok(self.audio.pop_front())
    }
}

/// Probabilities as functions of window start time, up to `end`.
pub struct TimedProbabilities<K, A> {
    pub kin: K,
    pub audio: A,
    pub end: f64,
}

impl<K: FnMut(f64) -> f64, A: FnMut(f64) -> f64> ProbabilitySource for TimedProbabilities<K, A> {
    fn kinematic_prob(&mut self, t0: f64, t1: f64) -> Result<Option<f64>> {
        Ok((t1 <= self.end + TIME_EPS).then(|| (self.kin)(t0)))
    }

    fn audio_prob(&mut self, t0: f64, t1: f64) -> Result<Option<f64>> {
        Ok((t1 <= self.end + TIME_EPS).then(|| (self.audio)(t0)))
    }
}

/// Run the multimodal state machine from `origin` until the source runs dry.
pub fn drive<S: ProbabilitySource + ?Sized>(source: &mut S, config: &SchedulerConfig, origin: f64) -> Result<ExecutionTrace> {
    config.validate()?;
    let mut state = SchedulerState::new(origin);
    let mut entries = Vec::new();
    loop {
        let t0 = state.next_window_start;
        let t1 = t0 + config.window_len(state.active_model);
        let Some(p) = source.prob(state.active_model, t0, t1)? else {
            break;
        };
        let (next, entry) = step(&state, config, p)?;
        entries.push(entry);
        state = next;
    }
    let duration_s = entries.iter().map(|e| e.t_end).fold(origin, f64::max) - origin;
    Ok(ExecutionTrace { entries, duration_s })
}

/// Run one model alone on its own lattice.
pub fn drive_single<S: ProbabilitySource + ?Sized>(
    source: &mut S,
    model: Modality,
    config: &SchedulerConfig,
    origin: f64,
) -> Result<ExecutionTrace> {
    config.validate()?;
    let (win, hop) = match model {
        Modality::Audio => (config.audio_window_s, config.audio_hop_s),
        Modality::Kinematic => (config.kin_window_s, config.kin_hop_s),
    };
    let mut entries = Vec::new();
    for k in 0usize.. {
        let t_start = origin + k as f64 * hop;
        let t_end = t_start + win;
        let Some(p) = source.prob(model, t_start, t_end)? else {
            break;
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(MODULE, format!("probability {p} outside [0, 1]")));
        }
        let cough = p >= config.threshold(model);
        entries.push(TraceEntry {
            t_start,
            t_end,
            model,
            probability: p,
            decision: if cough { Decision::Cough } else { Decision::NonCough },
        });
    }
    let duration_s = entries.iter().map(|e| e.t_end).fold(origin, f64::max) - origin;
    Ok(ExecutionTrace { entries, duration_s })
}

/// Signals and subject data for one recording.
#[derive(Debug, Clone)]
pub struct SessionInputs<'a> {
    pub audio: &'a AudioSignal,
    pub kinematic: &'a KinematicSignal,
    pub meta: SubjectMeta,
    /// Extraction settings; rate and window length are taken from the
    /// signal and scheduler config.
    pub audio_config: AudioConfig,
}

/// Trace plus the audio windows that were classified as cough.
#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub trace: ExecutionTrace,
    pub cough_windows: Vec<Window<AudioSignal>>,
}

fn check_model(model: &TreeEnsemble, want: Modality, window_s: f64, fs: f64) -> Result<()> {
    if model.modality != want {
        return Err(Error::config(MODULE, format!("expected a {want} model, got a {} model", model.modality)));
    }
    if (model.window_len_s - window_s).abs() > 1e-6 {
        return Err(Error::config(
            MODULE,
            format!("{want} model expects {} s windows, scheduler configured for {window_s} s", model.window_len_s),
        ));
    }
    if (model.fs_hz - fs).abs() > 0.5 {
        return Err(Error::config(
            MODULE,
            format!("{want} model expects {} Hz input, signal is {fs} Hz", model.fs_hz),
        ));
    }
    Ok(())
}

/// Feature extraction plus inference for both models, memoized per window.
struct ModelSource<'a> {
    inputs: &'a SessionInputs<'a>,
    audio: Option<(&'a TreeEnsemble, AudioExtractor, FeatureMask)>,
    kin: Option<(&'a TreeEnsemble, FeatureMask)>,
    config: &'a SchedulerConfig,
    cache: HashMap<(Modality, i64), f64>,
}

impl<'a> ModelSource<'a> {
    fn new(
        inputs: &'a SessionInputs<'a>,
        audio_model: Option<&'a TreeEnsemble>,
        kin_model: Option<&'a TreeEnsemble>,
        config: &'a SchedulerConfig,
    ) -> Result<Self> {
        config.validate()?;
        let audio = match audio_model {
            Some(m) => {
                check_model(m, Modality::Audio, config.audio_window_s, inputs.audio.fs())?;
                let cfg = AudioConfig {
                    fs_hz: inputs.audio.fs(),
                    window_len_s: config.audio_window_s,
                    ..inputs.audio_config.clone()
                };
                Some((m, AudioExtractor::new(cfg)?, m.mask()))
            }
            None => None,
        };
        let kin = match kin_model {
            Some(m) => {
                check_model(m, Modality::Kinematic, config.kin_window_s, inputs.kinematic.fs())?;
                Some((m, m.mask()))
            }
            None => None,
        };
        Ok(Self {
            inputs,
            audio,
            kin,
            config,
            cache: HashMap::new(),
        })
    }
}

impl ProbabilitySource for ModelSource<'_> {
    fn kinematic_prob(&mut self, t_start: f64, _: f64) -> Result<Option<f64>> {
        let sig = self.inputs.kinematic;
        let key = (Modality::Kinematic, sig.index_of(t_start));
        if let Some(p) = self.cache.get(&key) {
            return Ok(Some(*p));
        }
        let Some(w) = Window::at(sig, t_start, self.config.kin_window_s) else {
            return Ok(None);
        };
        let (model, mask) = self.kin.as_ref().expect("kinematic model present");
        let fv = extract_kinematic_features(&w.payload, mask, &self.inputs.meta)?;
        let p = model.predict_proba(&fv)?;
        self.cache.insert(key, p);
        Ok(Some(p))
    }

    fn audio_prob(&mut self, t_start: f64, _: f64) -> Result<Option<f64>> {
        let sig = self.inputs.audio;
        let key = (Modality::Audio, sig.index_of(t_start));
        if let Some(p) = self.cache.get(&key) {
            return Ok(Some(*p));
        }
        let Some(w) = Window::at(sig, t_start, self.config.audio_window_s) else {
            return Ok(None);
        };
        let (model, extractor, mask) = self.audio.as_ref().expect("audio model present");
        let fv = extractor.extract(&w.payload, mask, &self.inputs.meta)?;
        let p = model.predict_proba(&fv)?;
        self.cache.insert(key, p);
        Ok(Some(p))
    }
}

fn cough_windows(trace: &ExecutionTrace, audio: &AudioSignal) -> Vec<Window<AudioSignal>> {
    trace
        .entries
        .iter()
        .filter(|e| e.is_cough())
        .filter_map(|e| Window::at(audio, e.t_start, e.t_end - e.t_start))
        .collect()
}

/// Multimodal execution with real models.
pub fn run_session(
    inputs: &SessionInputs<'_>,
    audio_model: &TreeEnsemble,
    kin_model: &TreeEnsemble,
    config: &SchedulerConfig,
) -> Result<SessionOutput> {
    let mut src = ModelSource::new(inputs, Some(audio_model), Some(kin_model), config)?;
    let trace = drive(&mut src, config, inputs.kinematic.t0())?;
    let windows = cough_windows(
        &ExecutionTrace {
            entries: trace.entries.iter().filter(|e| e.model == Modality::Audio).copied().collect(),
            duration_s: trace.duration_s,
        },
        inputs.audio,
    );
    Ok(SessionOutput {
        trace,
        cough_windows: windows,
    })
}

/// Single-model execution. For the kinematic model, the returned windows are
/// the audio spans of the kinematic cough windows.
pub fn run_single_model(inputs: &SessionInputs<'_>, model: &TreeEnsemble, config: &SchedulerConfig) -> Result<SessionOutput> {
    let (a, k, origin) = match model.modality {
        Modality::Audio => (Some(model), None, inputs.audio.t0()),
        Modality::Kinematic => (None, Some(model), inputs.kinematic.t0()),
    };
    let mut src = ModelSource::new(inputs, a, k, config)?;
    let trace = drive_single(&mut src, model.modality, config, origin)?;
    let windows = cough_windows(&trace, inputs.audio);
    Ok(SessionOutput {
        trace,
        cough_windows: windows,
    })
}
