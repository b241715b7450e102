//! End-to-end batch run: rate matching, scheduling, delineation with periodic
//! flushes, scoring and energy estimation.

use crate::config::{AppConfig, RunMode};
use crate::error::{Error, Result};
use crate::eval::{match_events, metrics, EventMatchResult, MetricReport};
use crate::inference::TreeEnsemble;
use crate::ingest::{decimate, AnnotationSet, AudioSignal, Interval, KinematicSignal, Signal, SubjectMeta, Window};
use crate::postproc::{segment_power_peaks, CoughRegion, FlushAccumulator, PhysioConstants};
use crate::scheduler::{run_session, run_single_model, ExecutionTrace, SchedulerConfig, SessionInputs};
use crate::simkit::{estimate, EnergyEstimate, SessionEval, SweepSession};

const MODULE: &str = "pipeline";

/// Models available to a run; which are required depends on the run mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct Models<'a> {
    pub audio: Option<&'a TreeEnsemble>,
    pub kinematic: Option<&'a TreeEnsemble>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub trace: ExecutionTrace,
    pub events: Vec<CoughRegion>,
    pub cough_windows: usize,
    pub raw_regions: usize,
    pub matching: Option<EventMatchResult>,
    pub metrics: Option<MetricReport>,
    pub energy: EnergyEstimate,
}

impl PipelineOutput {
    pub fn event_intervals(&self) -> Vec<Interval> {
        self.events.iter().map(|r| Interval::new(r.t_start, r.t_end)).collect()
    }
}

/// Brings audio to `target_fs` by integer decimation.
pub fn prepare_audio(audio: &AudioSignal, target_fs: f64) -> Result<AudioSignal> {
    let ratio = audio.fs() / target_fs;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-6 {
        return Err(Error::config(
            MODULE,
            format!("audio rate {} Hz is not an integer multiple of the model rate {target_fs} Hz", audio.fs()),
        ));
    }
    if factor == 1.0 {
        Ok(audio.clone())
    } else {
        decimate(audio, factor as usize)
    }
}

/// Segments cough windows (in time order) and refines the regions with a
/// flush every `flush_interval_s`, counted from `origin`.
pub fn delineate(
    windows: &[Window<AudioSignal>],
    physio: &PhysioConstants,
    flush_interval_s: f64,
    origin: f64,
) -> Result<(Vec<CoughRegion>, usize)> {
    if !(flush_interval_s > 0.0) {
        return Err(Error::config(MODULE, "flush interval must be positive"));
    }
    let mut acc = FlushAccumulator::new(*physio)?;
    let mut events = Vec::new();
    let mut raw = 0;
    let mut next_flush = origin + flush_interval_s;
    for w in windows {
        // every later window starts at or after w.t_start, and so do its peaks
        if w.t_start >= next_flush {
            while next_flush + flush_interval_s <= w.t_start {
                next_flush += flush_interval_s;
            }
            events.extend(acc.flush(next_flush)?);
            next_flush += flush_interval_s;
        }
        let regions = segment_power_peaks(&w.payload)?;
        raw += regions.len();
        acc.extend(regions)?;
    }
    events.extend(acc.finish()?);
    Ok((events, raw))
}

fn need<'a>(m: Option<&'a TreeEnsemble>, what: &str, mode: RunMode) -> Result<&'a TreeEnsemble> {
    m.ok_or_else(|| Error::config(MODULE, format!("{} mode needs a {what} model", mode.as_str())))
}

/// Runs one recording. `truth` enables scoring.
pub fn run_pipeline(
    audio: &AudioSignal,
    kinematic: &KinematicSignal,
    meta: SubjectMeta,
    truth: Option<&AnnotationSet>,
    models: Models<'_>,
    config: &AppConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let audio_fs = models.audio.map_or(config.audio.fs_hz, |m| m.fs_hz);
    let audio = prepare_audio(audio, audio_fs)?;
    let inputs = SessionInputs {
        audio: &audio,
        kinematic,
        meta,
        audio_config: config.audio.clone(),
    };
    let out = match config.run.mode {
        RunMode::Multimodal => run_session(
            &inputs,
            need(models.audio, "audio", config.run.mode)?,
            need(models.kinematic, "kinematic", config.run.mode)?,
            &config.scheduler,
        )?,
        RunMode::AudioOnly => run_single_model(&inputs, need(models.audio, "audio", config.run.mode)?, &config.scheduler)?,
        RunMode::KinematicOnly => run_single_model(&inputs, need(models.kinematic, "kinematic", config.run.mode)?, &config.scheduler)?,
    };
    let origin = out.trace.entries.first().map_or(audio.t0(), |e| e.t_start);
    let (events, raw_regions) = delineate(&out.cough_windows, &config.physio, config.run.flush_interval_s, origin)?;
    let intervals: Vec<Interval> = events.iter().map(|r| Interval::new(r.t_start, r.t_end)).collect();
    let (matching, report) = match truth {
        Some(t) => {
            let m = match_events(&intervals, &t.events, config.run.match_tolerance_s)?;
            let hours = audio.duration() / 3600.0;
            let r = metrics(&m, hours)?;
            (Some(m), Some(r))
        }
        None => (None, None),
    };
    let energy = estimate(&out.trace, &config.costs)?;
    Ok(PipelineOutput {
        trace: out.trace,
        events,
        cough_windows: out.cough_windows.len(),
        raw_regions,
        matching,
        metrics: report,
        energy,
    })
}

/// An owned recording with ground truth, replayable under any scheduler
/// setting for sweeps.
#[derive(Debug, Clone)]
pub struct ScoredRecording {
    pub audio: AudioSignal,
    pub kinematic: KinematicSignal,
    pub meta: SubjectMeta,
    pub truth: AnnotationSet,
    pub audio_model: TreeEnsemble,
    pub kinematic_model: TreeEnsemble,
    pub config: AppConfig,
}

impl SweepSession for ScoredRecording {
    fn evaluate(&self, scheduler: &SchedulerConfig) -> Result<SessionEval> {
        let config = AppConfig {
            scheduler: scheduler.clone(),
            ..self.config.clone()
        };
        let out = run_pipeline(
            &self.audio,
            &self.kinematic,
            self.meta,
            Some(&self.truth),
            Models {
                audio: Some(&self.audio_model),
                kinematic: Some(&self.kinematic_model),
            },
            &config,
        )?;
        Ok(SessionEval {
            f1: out.metrics.map_or(0.0, |m| m.f1),
            trace: out.trace,
        })
    }
}
