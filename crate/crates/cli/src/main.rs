//! `coughe` command-line front end.
//!
//! Exit status: 0 on success, 2 for unusable inputs (missing or malformed
//! files, bad configuration), 1 for any other failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coughe::config::RunMode;
use coughe::scheduler::Mode;

#[derive(Parser)]
#[command(name = "coughe", version, about = "Multimodal cough detection, scoring and energy simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect coughs in one recording; writes events.json, trace.jsonl and report.json.
    Run(RunArgs),
    /// Score predicted events against ground truth.
    Score(ScoreArgs),
    /// Dump every registry feature for each window of a recording as CSV.
    Features(FeaturesArgs),
    /// Estimate energy and runtime from an execution trace.
    Simulate(SimulateArgs),
    /// Sweep scheduler settings over recordings and report F1 against energy.
    Sweep(SweepArgs),
    /// Write a synthetic recording and matching stump models.
    Fixture(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum RunModeArg {
    Multimodal,
    AudioOnly,
    KinematicOnly,
}

impl From<RunModeArg> for RunMode {
    fn from(m: RunModeArg) -> Self {
        match m {
            RunModeArg::Multimodal => RunMode::Multimodal,
            RunModeArg::AudioOnly => RunMode::AudioOnly,
            RunModeArg::KinematicOnly => RunMode::KinematicOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SchedModeArg {
    Rerun,
    NoRerun,
}

impl From<SchedModeArg> for Mode {
    fn from(m: SchedModeArg) -> Self {
        match m {
            SchedModeArg::Rerun => Mode::Rerun,
            SchedModeArg::NoRerun => Mode::NoRerun,
        }
    }
}

/// Settings shared by `run` and `sweep`; flags override the config file.
#[derive(Args, Clone)]
pub struct CommonConfig {
    /// Config file (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cost table JSON used for energy estimates.
    #[arg(long)]
    pub costs: Option<PathBuf>,
    /// Scheduler trigger mode.
    #[arg(long, value_enum)]
    pub scheduler_mode: Option<SchedModeArg>,
    /// Maximum consecutive audio windows per trigger.
    #[arg(long)]
    pub n_windows_max: Option<usize>,
    /// Kinematic decision threshold.
    #[arg(long)]
    pub th_kin: Option<f64>,
    /// Audio decision threshold.
    #[arg(long)]
    pub th_audio: Option<f64>,
    /// Fixed peak-to-end distance in seconds instead of the per-session average.
    #[arg(long)]
    pub pk_to_end_avg: Option<f64>,
}

#[derive(Args)]
pub struct RunArgs {
    /// 16-bit PCM mono WAV.
    #[arg(long)]
    pub audio: PathBuf,
    /// IMU CSV (t,ax,ay,az,yaw,pitch,roll).
    #[arg(long)]
    pub imu: PathBuf,
    /// Ground-truth annotations; enables scoring.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Subject metadata JSON ({"gender":0|1,"bmi":x}).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub audio_model: Option<PathBuf>,
    #[arg(long)]
    pub kin_model: Option<PathBuf>,
    /// Which models to run.
    #[arg(long, value_enum)]
    pub mode: Option<RunModeArg>,
    #[command(flatten)]
    pub common: CommonConfig,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Predicted events JSON as written by `run`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth annotations JSON.
    #[arg(long)]
    pub truth: PathBuf,
    /// Recording length in seconds.
    #[arg(long)]
    pub duration_s: f64,
    /// Boundary tolerance in seconds.
    #[arg(long, default_value_t = coughe::eval::MATCH_TOLERANCE_S)]
    pub tolerance: f64,
    /// Write the report JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Audio WAV input.
    #[arg(long, required_unless_present = "imu", conflicts_with = "imu")]
    pub audio: Option<PathBuf>,
    /// IMU CSV input.
    #[arg(long)]
    pub imu: Option<PathBuf>,
    /// Window length in seconds (default 0.8 audio, 0.5 IMU).
    #[arg(long)]
    pub window_s: Option<f64>,
    /// Hop in seconds (default half the window).
    #[arg(long)]
    pub hop_s: Option<f64>,
    /// Audio rate features are computed at.
    #[arg(long, default_value_t = 8000.0)]
    pub fs: f64,
    /// Use MFCC summaries instead of Mel band summaries.
    #[arg(long)]
    pub mfcc: bool,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Execution trace JSONL as written by `run`.
    #[arg(long, required_unless_present = "reference_totals")]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub costs: Option<PathBuf>,
    /// Session length in seconds (default: span of the trace).
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// Reference energy in joules; adds the relative saving.
    #[arg(long)]
    pub reference_j: Option<f64>,
    /// Print the savings implied by the measured test-set totals.
    #[arg(long)]
    pub reference_totals: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Recording directory with audio.wav, imu.csv, annotations.json and
    /// optionally meta.json. Repeatable.
    #[arg(long = "session", required = true)]
    pub sessions: Vec<PathBuf>,
    #[arg(long)]
    pub audio_model: PathBuf,
    #[arg(long)]
    pub kin_model: PathBuf,
    #[command(flatten)]
    pub common: CommonConfig,
    /// Scheduler modes to sweep.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub modes: Vec<SchedModeArg>,
    /// Values of n_windows_max to sweep.
    #[arg(long, value_delimiter = ',')]
    pub n_max: Vec<usize>,
    /// Kinematic thresholds to sweep (default 0.05..0.5 step 0.05).
    #[arg(long, value_delimiter = ',')]
    pub th_kin_grid: Vec<f64>,
    /// Audio thresholds to sweep (default 0.05..0.5 step 0.05).
    #[arg(long, value_delimiter = ',')]
    pub th_audio_grid: Vec<f64>,
    /// Sweep only the configured point.
    #[arg(long)]
    pub single: bool,
    /// Append a 0/1 column marking the F1/energy Pareto front.
    #[arg(long)]
    pub pareto: bool,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output CSV (default standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub events: usize,
    #[arg(long, default_value_t = 10.0)]
    pub duration_s: f64,
    /// Noise level (0 is noiseless).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Score(a) => commands::score(a),
        Command::Features(a) => commands::features(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Fixture(a) => commands::fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
