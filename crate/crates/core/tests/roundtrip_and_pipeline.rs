use coughe::config::{AppConfig, RunMode};
use coughe::fixtures::{fixture_models, gen_session};
use coughe::ingest::{
    load_annotations, load_audio_wav, load_imu_csv, load_meta, load_recording, write_audio_wav, write_imu_csv,
    AudioSignal, KinChannel, KinematicSignal, Signal,
};
use coughe::pipeline::{run_pipeline, Models};
use coughe::simkit::{sweep, SweepGrid};
use coughe::Modality;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wav_round_trip_within_one_step(x in prop::collection::vec(-1.0f64..=1.0, 0..2000)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let s = AudioSignal::new(x.clone(), 8000.0, 0.0).unwrap();
        write_audio_wav(&p, &s).unwrap();
        let back = load_audio_wav(&p).unwrap();
        prop_assert_eq!(back.fs(), 8000.0);
        prop_assert_eq!(back.len(), x.len());
        for (a, b) in back.samples().iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn imu_round_trip_is_exact(
        rows in prop::collection::vec(prop::array::uniform6(-20.0f64..20.0), 3..300),
    ) {
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
        let s = KinematicSignal::from_axes(col(0), col(1), col(2), col(3), col(4), col(5), 100.0, 0.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("imu.csv");
        write_imu_csv(&p, &s).unwrap();
        let back = load_imu_csv(&p).unwrap();
        prop_assert!((back.fs() - 100.0).abs() < 1e-6);
        for ch in [KinChannel::AccelX, KinChannel::Roll, KinChannel::AccelNorm] {
            prop_assert_eq!(back.channel(ch), s.channel(ch));
        }
    }
}

#[test]
fn fixture_files_reload_identically() {
    let s = gen_session(77, 4, 14.0, 0.3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = s.write_to(dir.path()).unwrap();
    let rec = load_recording(&p.audio, &p.imu, &p.annotations, &p.meta).unwrap();
    assert_eq!(rec.annotations, s.annotations);
    assert_eq!(rec.meta, s.meta);
    assert_eq!(load_meta(&p.meta).unwrap(), s.meta);
    assert_eq!(load_annotations(&p.annotations).unwrap().len(), 4);
    assert_eq!(rec.kinematic.channel(KinChannel::AccelZ), s.kinematic.channel(KinChannel::AccelZ));
    assert_eq!(rec.audio.len(), s.audio.len());
}

#[test]
fn rerun_finds_every_event_at_moderate_noise() {
    let (a, k) = fixture_models();
    for seed in 0..6 {
        let s = gen_session(seed, 5, 20.0, 0.3).unwrap();
        let out = run_pipeline(
            &s.audio,
            &s.kinematic,
            s.meta,
            Some(&s.annotations),
            Models { audio: Some(&a), kinematic: Some(&k) },
            &AppConfig::default(),
        )
        .unwrap();
        let m = out.metrics.unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (5, 0, 0), "seed {seed}");
    }
}

#[test]
fn multimodal_runs_less_audio_than_audio_only() {
    let (a, k) = fixture_models();
    let s = gen_session(8, 4, 20.0, 0.2).unwrap();
    let run = |mode| {
        let mut cfg = AppConfig::default();
        cfg.run.mode = mode;
        run_pipeline(&s.audio, &s.kinematic, s.meta, Some(&s.annotations), Models { audio: Some(&a), kinematic: Some(&k) }, &cfg)
            .unwrap()
    };
    let multi = run(RunMode::Multimodal);
    let audio = run(RunMode::AudioOnly);
    let kin = run(RunMode::KinematicOnly);
    assert!(multi.trace.count(Modality::Audio) < audio.trace.count(Modality::Audio));
    assert!(multi.energy.energy_j < audio.energy.energy_j);
    assert!(kin.energy.energy_j < multi.energy.energy_j);
    assert_eq!(kin.trace.share_percent(Modality::Kinematic), 100.0);
}

#[test]
fn energy_does_not_drop_as_kinematic_threshold_falls() {
    let (a, k) = fixture_models();
    let base = AppConfig::default();
    let sessions: Vec<_> = (20..23)
        .map(|seed| {
            let s = gen_session(seed, 4, 20.0, 0.5).unwrap();
            coughe::pipeline::ScoredRecording {
                audio: s.audio,
                kinematic: s.kinematic,
                meta: s.meta,
                truth: s.annotations,
                audio_model: a.clone(),
                kinematic_model: k.clone(),
                config: base.clone(),
            }
        })
        .collect();
    let grid = SweepGrid {
        th_audio: vec![0.3],
        ..SweepGrid::default()
    };
    let rows = sweep(&sessions, &grid, &base.scheduler, &base.costs, Some(2)).unwrap();
    assert_eq!(rows.len(), 10);
    // rows are sorted by ascending th_kin
    for w in rows.windows(2) {
        assert!(w[0].th_kin < w[1].th_kin);
        assert!(w[0].energy_j >= w[1].energy_j - 1e-12, "{w:?}");
    }
}
