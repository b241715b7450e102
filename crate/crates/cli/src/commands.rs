use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use coughe::config::AppConfig;
use coughe::dsp::{extract_kinematic_features, AudioExtractor};
use coughe::eval::{score_sessions, EventMatchResult, MetricReport, ScoreReport, ScoredSession};
use coughe::fixtures::{gen_session, write_fixture_models};
use coughe::inference::{load_model, TreeEnsemble};
use coughe::ingest::{
    frame_stream, load_annotations, load_audio_wav, load_imu_csv, load_meta, Interval, SubjectMeta,
};
use coughe::pipeline::{prepare_audio, run_pipeline, Models, ScoredRecording};
use coughe::postproc::EventsFile;
use coughe::registry::{audio_names, kinematic_names, AudioVariant, FeatureMask, FeatureVector};
use coughe::scheduler::ExecutionTrace;
use coughe::simkit::{
    estimate, saving_percent, sweep as run_sweep, write_sweep_csv, CostTable, EnergyEstimate, SweepGrid,
    REFERENCE_AUDIO_TOTAL_J, REFERENCE_KINEMATIC_TOTAL_J, REFERENCE_MULTIMODAL_TOTAL_J,
};
use coughe::{Error, Result};

use crate::{CommonConfig, FeaturesArgs, FixtureArgs, RunArgs, ScoreArgs, SimulateArgs, SweepArgs};

const MODULE: &str = "cli";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(MODULE, path.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(MODULE, path.display().to_string(), e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

/// Config file, then flag overrides.
fn resolve_config(c: &CommonConfig) -> Result<AppConfig> {
    let mut cfg = match &c.config {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    if let Some(p) = &c.costs {
        cfg.costs = CostTable::load(p)?;
    }
    if let Some(m) = c.scheduler_mode {
        cfg.scheduler.mode = m.into();
    }
    if let Some(n) = c.n_windows_max {
        cfg.scheduler.n_windows_max = n;
    }
    if let Some(t) = c.th_kin {
        cfg.scheduler.th_kin = t;
    }
    if let Some(t) = c.th_audio {
        cfg.scheduler.th_audio = t;
    }
    if let Some(v) = c.pk_to_end_avg {
        cfg.physio.pk_to_end_avg = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_opt_model(p: &Option<PathBuf>) -> Result<Option<TreeEnsemble>> {
    p.as_deref().map(load_model).transpose()
}

fn load_opt_meta(p: &Option<PathBuf>) -> Result<SubjectMeta> {
    p.as_deref().map_or(Ok(SubjectMeta::default()), load_meta)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Serialize)]
struct RunInputs {
    audio: String,
    imu: String,
    annotations: Option<String>,
    meta: Option<String>,
    audio_model: Option<String>,
    kinematic_model: Option<String>,
}

#[derive(Serialize)]
struct RunReport {
    generated_unix_s: u64,
    inputs: RunInputs,
    events_path: String,
    trace_path: String,
    event_count: usize,
    cough_windows: usize,
    raw_regions: usize,
    matching: Option<EventMatchResult>,
    metrics: Option<MetricReport>,
    energy: EnergyEstimate,
    config: AppConfig,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn run(a: RunArgs) -> Result<()> {
    let mut cfg = resolve_config(&a.common)?;
    if let Some(m) = a.mode {
        cfg.run.mode = m.into();
    }
    let audio_model = load_opt_model(&a.audio_model)?;
    let kin_model = load_opt_model(&a.kin_model)?;
    let audio = load_audio_wav(&a.audio)?;
    let imu = load_imu_csv(&a.imu)?;
    let meta = load_opt_meta(&a.meta)?;
    let truth = a.annotations.as_deref().map(load_annotations).transpose()?;

    let out = run_pipeline(
        &audio,
        &imu,
        meta,
        truth.as_ref(),
        Models { audio: audio_model.as_ref(), kinematic: kin_model.as_ref() },
        &cfg,
    )?;

    std::fs::create_dir_all(&a.out)
        .map_err(|e| Error::io(MODULE, display(&a.out), e))?;
    let events_path = a.out.join("events.json");
    let trace_path = a.out.join("trace.jsonl");
    let report_path = a.out.join("report.json");
    write_text(&events_path, &EventsFile::from_regions(&out.events).to_json_string())?;
    let mut tw = create(&trace_path)?;
    out.trace
        .write_jsonl(&mut tw)
        .and_then(|_| tw.flush())
        .map_err(|e| Error::io(MODULE, display(&trace_path), e))?;

    let report = RunReport {
        generated_unix_s: unix_now(),
        inputs: RunInputs {
            audio: display(&a.audio),
            imu: display(&a.imu),
            annotations: a.annotations.as_deref().map(display),
            meta: a.meta.as_deref().map(display),
            audio_model: a.audio_model.as_deref().map(display),
            kinematic_model: a.kin_model.as_deref().map(display),
        },
        events_path: display(&events_path),
        trace_path: display(&trace_path),
        event_count: out.events.len(),
        cough_windows: out.cough_windows,
        raw_regions: out.raw_regions,
        matching: out.matching.clone(),
        metrics: out.metrics.clone(),
        energy: out.energy,
        config: cfg.clone(),
    };
    write_text(&report_path, &to_json(&report))?;

    println!("mode            {}", cfg.run.mode.as_str());
    println!("events          {}", out.events.len());
    println!("audio windows   {}", out.energy.audio_count);
    println!("kin windows     {}", out.energy.kinematic_count);
    println!("audio share     {:.2}%", out.energy.audio_share);
    println!("energy          {:.6} J", out.energy.energy_j);
    if let Some(m) = &out.metrics {
        print_metrics(m);
    }
    println!("report          {}", display(&report_path));
    Ok(())
}

fn fmt_opt(defined: bool, v: f64) -> String {
    if defined {
        format!("{v:.4}")
    } else {
        "n/a".to_string()
    }
}

fn print_metrics(m: &MetricReport) {
    println!("tp/fp/fn        {}/{}/{}", m.tp, m.fp, m.fn_);
    println!("sensitivity     {}", fmt_opt(m.se_defined, m.se));
    println!("precision       {}", fmt_opt(m.pr_defined, m.pr));
    println!("f1              {:.4}", m.f1);
    println!("fp/hour         {:.4}", m.fp_per_hour);
}

pub fn score(a: ScoreArgs) -> Result<()> {
    let pred = EventsFile::read(&a.pred)?;
    let truth = load_annotations(&a.truth)?;
    let intervals: Vec<Interval> = pred.events.iter().map(|e| Interval::new(e.start, e.end)).collect();
    let report: ScoreReport = score_sessions(
        &[ScoredSession { pred: &intervals, truth: &truth, duration_h: a.duration_s / 3600.0 }],
        a.tolerance,
    )?;
    print_metrics(&report.overall);
    for (tag, m) in &report.scenarios {
        println!("[{tag}] se {} pr {} f1 {:.4}", fmt_opt(m.se_defined, m.se), fmt_opt(m.pr_defined, m.pr), m.f1);
    }
    if let Some(out) = &a.out {
        write_text(out, &to_json(&report))?;
    }
    Ok(())
}

fn is_empty_file(p: &Path) -> Result<bool> {
    std::fs::metadata(p)
        .map(|m| m.len() == 0)
        .map_err(|e| Error::io(MODULE, display(p), e))
}

fn write_feature_rows(out: &Path, names: &[String], rows: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(out)?);
    let err = |e: csv::Error| Error::invalid(MODULE, format!("writing {}: {e}", out.display()));
    w.write_record(names).map_err(err)?;
    for r in rows {
        let rec: Vec<String> = names
            .iter()
            .map(|n| r.get(n).map_or_else(String::new, |v| v.to_string()))
            .collect();
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(MODULE, display(out), e))
}

pub fn features(a: FeaturesArgs) -> Result<()> {
    let meta = load_opt_meta(&a.meta)?;
    if let Some(path) = &a.audio {
        let variant = if a.mfcc { AudioVariant::Mfcc } else { AudioVariant::Mel };
        let names = audio_names(variant);
        if is_empty_file(path)? {
            return write_feature_rows(&a.out, &names, &[]);
        }
        let window_s = a.window_s.unwrap_or(0.8);
        let hop_s = a.hop_s.unwrap_or(window_s / 2.0);
        let signal = prepare_audio(&load_audio_wav(path)?, a.fs)?;
        let extractor = AudioExtractor::new(coughe::dsp::AudioConfig {
            fs_hz: a.fs,
            window_len_s: window_s,
            ..Default::default()
        })?;
        let mask = FeatureMask::audio(variant);
        let rows = frame_stream(&signal, window_s, hop_s)?
            .iter()
            .map(|w| extractor.extract(&w.payload, &mask, &meta))
            .collect::<Result<Vec<_>>>()?;
        eprintln!("{} windows, {} features", rows.len(), names.len());
        write_feature_rows(&a.out, &names, &rows)
    } else {
        let path = a.imu.as_ref().expect("clap enforces one source");
        let names = kinematic_names();
        if is_empty_file(path)? {
            return write_feature_rows(&a.out, &names, &[]);
        }
        let window_s = a.window_s.unwrap_or(0.5);
        let hop_s = a.hop_s.unwrap_or(window_s / 2.0);
        let signal = load_imu_csv(path)?;
        let mask = FeatureMask::kinematic();
        let rows = frame_stream(&signal, window_s, hop_s)?
            .iter()
            .map(|w| extract_kinematic_features(&w.payload, &mask, &meta))
            .collect::<Result<Vec<_>>>()?;
        eprintln!("{} windows, {} features", rows.len(), names.len());
        write_feature_rows(&a.out, &names, &rows)
    }
}

#[derive(Serialize)]
struct SimulateReport {
    #[serde(flatten)]
    estimate: EnergyEstimate,
    duration_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    saving_percent: Option<f64>,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    if a.reference_totals {
        let multimodal = saving_percent(REFERENCE_AUDIO_TOTAL_J, REFERENCE_MULTIMODAL_TOTAL_J)?;
        let kinematic = saving_percent(REFERENCE_AUDIO_TOTAL_J, REFERENCE_KINEMATIC_TOTAL_J)?;
        println!("audio-only       {REFERENCE_AUDIO_TOTAL_J:>6.2} J");
        println!("multimodal       {REFERENCE_MULTIMODAL_TOTAL_J:>6.2} J  saving {multimodal:.2}%");
        println!("kinematic-only   {REFERENCE_KINEMATIC_TOTAL_J:>6.2} J  saving {kinematic:.2}%");
        if a.trace.is_none() {
            return Ok(());
        }
    }
    let path = a.trace.as_ref().expect("clap requires a trace");
    let costs = match &a.costs {
        Some(p) => CostTable::load(p)?,
        None => CostTable::default(),
    };
    let f = File::open(path).map_err(|e| Error::io(MODULE, display(path), e))?;
    let trace = ExecutionTrace::read_jsonl(BufReader::new(f), &display(path), a.duration_s)?;
    let est = estimate(&trace, &costs)?;
    let saving = a.reference_j.map(|r| saving_percent(r, est.energy_j)).transpose()?;
    let report = SimulateReport {
        estimate: est,
        duration_s: trace.duration_s,
        reference_j: a.reference_j,
        saving_percent: saving,
    };
    println!("{}", to_json(&report));
    Ok(())
}

fn load_session(dir: &Path, cfg: &AppConfig, audio_model: &TreeEnsemble, kin_model: &TreeEnsemble) -> Result<ScoredRecording> {
    let meta_path = dir.join("meta.json");
    let meta = if meta_path.exists() { load_meta(&meta_path)? } else { SubjectMeta::default() };
    Ok(ScoredRecording {
        audio: load_audio_wav(&dir.join("audio.wav"))?,
        kinematic: load_imu_csv(&dir.join("imu.csv"))?,
        meta,
        truth: load_annotations(&dir.join("annotations.json"))?,
        audio_model: audio_model.clone(),
        kinematic_model: kin_model.clone(),
        config: cfg.clone(),
    })
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = resolve_config(&a.common)?;
    let audio_model = load_model(&a.audio_model)?;
    let kin_model = load_model(&a.kin_model)?;
    let sessions = a
        .sessions
        .iter()
        .map(|d| load_session(d, &cfg, &audio_model, &kin_model))
        .collect::<Result<Vec<_>>>()?;
    let mut grid = if a.single { SweepGrid::single(&cfg.scheduler) } else { cfg.sweep.clone() };
    if !a.modes.is_empty() {
        grid.modes = a.modes.iter().map(|&m| m.into()).collect();
    }
    if !a.n_max.is_empty() {
        grid.n_windows_max = a.n_max.clone();
    }
    if !a.th_kin_grid.is_empty() {
        grid.th_kin = a.th_kin_grid.clone();
    }
    if !a.th_audio_grid.is_empty() {
        grid.th_audio = a.th_audio_grid.clone();
    }
    eprintln!("{} grid points x {} sessions", grid.len(), sessions.len());
    let rows = run_sweep(&sessions, &grid, &cfg.scheduler, &cfg.costs, a.jobs)?;
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            write_sweep_csv(&rows, a.pareto, &mut w)?;
            w.flush().map_err(|e| Error::io(MODULE, display(p), e))
        }
        None => write_sweep_csv(&rows, a.pareto, io::stdout().lock()),
    }
}

pub fn fixture(a: FixtureArgs) -> Result<()> {
    let s = gen_session(a.seed, a.events, a.duration_s, a.noise)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(MODULE, &a.out, e))?;
    let paths = s.write_to(&a.out)?;
    let (am, km) = write_fixture_models(&a.out)?;
    for p in [&paths.audio, &paths.imu, &paths.annotations, &paths.meta, &am, &km] {
        println!("{}", display(p));
    }
    Ok(())
}
