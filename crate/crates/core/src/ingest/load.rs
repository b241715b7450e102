use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::Deserialize;

use super::{AnnotationSet, AudioSignal, Interval, KinChannel, KinematicSignal, Signal, SubjectMeta, MODULE};
use crate::error::{Error, Result};

/// One subject recording with both modalities, ground truth and metadata.
#[derive(Debug, Clone)]
pub struct Recording {
    pub audio: AudioSignal,
    pub kinematic: KinematicSignal,
    pub annotations: AnnotationSet,
    pub meta: SubjectMeta,
}

/// Maximum tolerated duration mismatch between the two modalities.
const MAX_DURATION_MISMATCH_S: f64 = 1.0;

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Read a 16-bit PCM mono WAV file, rescaled to [-1, 1].
pub fn load_audio_wav(path: &Path) -> Result<AudioSignal> {
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(MODULE, path, io),
        other => Error::parse(MODULE, display(path), other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::parse(
            MODULE,
            display(path),
            format!("expected mono audio, found {} channels", spec.channels),
        ));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::parse(
            MODULE,
            display(path),
            format!(
                "expected 16-bit integer PCM, found {}-bit {:?}",
                spec.bits_per_sample, spec.sample_format
            ),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .enumerate()
        .map(|(i, s)| {
            s.map(|v| v as f64 / 32768.0).map_err(|e| {
                Error::parse(MODULE, display(path), format!("sample {i}: {e}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AudioSignal::new(samples, spec.sample_rate as f64, 0.0)
}

/// Write `signal` as 16-bit PCM mono. Samples are clipped to [-1, 1].
pub fn write_audio_wav(path: &Path, signal: &AudioSignal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.fs().round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let to_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(MODULE, path, io),
        other => Error::parse(MODULE, display(path), other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(to_err)?;
    for &s in signal.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}

const IMU_COLUMNS: [&str; 7] = ["t", "ax", "ay", "az", "yaw", "pitch", "roll"];
const IMU_NORM_COLUMNS: [(&str, KinChannel); 2] =
    [("accel_norm", KinChannel::AccelNorm), ("angles_norm", KinChannel::AnglesNorm)];
/// Stored norm columns must agree with the recomputed norms within this.
const NORM_TOLERANCE: f64 = 1e-6;

/// Read the IMU CSV (`t,ax,ay,az,yaw,pitch,roll`, optional `accel_norm`,
/// `angles_norm`). The sampling rate is inferred from the `t` column.
pub fn load_imu_csv(path: &Path) -> Result<KinematicSignal> {
    let file = File::open(path).map_err(|e| Error::io(MODULE, path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(MODULE, display(path), e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(IMU_COLUMNS) {
        *slot = col(name).ok_or_else(|| {
            Error::parse(MODULE, display(path), format!("missing column `{name}`"))
        })?;
    }
    let norm_idx: Vec<(usize, KinChannel)> = IMU_NORM_COLUMNS
        .iter()
        .filter_map(|(name, ch)| col(name).map(|i| (i, *ch)))
        .collect();

    let mut cols: [Vec<f64>; 7] = Default::default();
    let mut stored_norms: Vec<Vec<f64>> = vec![Vec::new(); norm_idx.len()];
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::parse(MODULE, display(path), format!("line {line}: {e}")))?;
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).ok_or_else(|| {
                Error::parse(MODULE, display(path), format!("line {line}: missing value for `{name}`"))
            })?;
            raw.parse::<f64>().map_err(|_| {
                Error::parse(
                    MODULE,
                    display(path),
                    format!("line {line}: column `{name}` has non-numeric value {raw:?}"),
                )
            })
        };
        for (c, (&i, name)) in idx.iter().zip(IMU_COLUMNS).enumerate() {
            cols[c].push(field(i, name)?);
        }
        for (k, (i, ch)) in norm_idx.iter().enumerate() {
            stored_norms[k].push(field(*i, ch.name())?);
        }
    }

    let t = &cols[0];
    if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::parse(
            MODULE,
            display(path),
            format!("line {}: timestamps must be strictly increasing", i + 3),
        ));
    }
    let (fs, t0) = match t.len() {
        0 => (100.0, 0.0),
        1 => (100.0, t[0]),
        n => ((n - 1) as f64 / (t[n - 1] - t[0]), t[0]),
    };
    let [_, ax, ay, az, yaw, pitch, roll] = cols;
    let sig = KinematicSignal::from_axes(ax, ay, az, yaw, pitch, roll, fs, t0)?;
    for ((_, ch), stored) in norm_idx.iter().zip(&stored_norms) {
        let derived = sig.channel(*ch);
        if let Some(i) = stored
            .iter()
            .zip(derived)
            .position(|(s, d)| (s - d).abs() > NORM_TOLERANCE)
        {
            return Err(Error::parse(
                MODULE,
                display(path),
                format!(
                    "line {}: stored `{}` {} disagrees with recomputed norm {}",
                    i + 2,
                    ch.name(),
                    stored[i],
                    derived[i]
                ),
            ));
        }
    }
    Ok(sig)
}

/// Write the IMU CSV consumed by [`load_imu_csv`], norm columns omitted.
pub fn write_imu_csv(path: &Path, signal: &KinematicSignal) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(MODULE, display(path), e.to_string()))?;
    let csv_err = |e: csv::Error| Error::parse(MODULE, display(path), e.to_string());
    w.write_record(IMU_COLUMNS).map_err(csv_err)?;
    let chans = [
        KinChannel::AccelX,
        KinChannel::AccelY,
        KinChannel::AccelZ,
        KinChannel::Yaw,
        KinChannel::Pitch,
        KinChannel::Roll,
    ];
    for i in 0..signal.len() {
        let t = signal.t0() + i as f64 / signal.fs();
        let mut rec = vec![format!("{t}")];
        rec.extend(chans.iter().map(|c| format!("{}", signal.channel(*c)[i])));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(MODULE, path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(MODULE, path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        Error::parse(
            MODULE,
            display(path),
            format!("line {} column {}: {e}", e.line(), e.column()),
        )
    })
}

#[derive(Deserialize)]
struct AnnotationFile {
    events: Vec<Interval>,
    #[serde(default)]
    scenario: Option<String>,
}

/// Read `{"events":[{"start":s,"end":s}, ...], "scenario": optional}`.
pub fn load_annotations(path: &Path) -> Result<AnnotationSet> {
    let raw: AnnotationFile = read_json(path)?;
    AnnotationSet::new(raw.events, raw.scenario)
}

/// Read `{"gender":0|1,"bmi":float}`.
pub fn load_meta(path: &Path) -> Result<SubjectMeta> {
    let meta: SubjectMeta = read_json(path)?;
    meta.validate()?;
    Ok(meta)
}

/// Load all four files of a recording and check the modalities line up.
pub fn load_recording(
    audio_path: &Path,
    imu_path: &Path,
    annotation_path: &Path,
    meta_path: &Path,
) -> Result<Recording> {
    let audio = load_audio_wav(audio_path)?;
    let kinematic = load_imu_csv(imu_path)?;
    let annotations = load_annotations(annotation_path)?;
    let meta = load_meta(meta_path)?;
    let audio_end = audio.t0() + audio.duration();
    let kin_end = kinematic.t0() + kinematic.duration();
    if (audio_end - kin_end).abs() > MAX_DURATION_MISMATCH_S {
        return Err(Error::Alignment(format!(
            "audio ends at {audio_end:.3} s but kinematic data ends at {kin_end:.3} s"
        )));
    }
    Ok(Recording {
        audio,
        kinematic,
        annotations,
        meta,
    })
}
