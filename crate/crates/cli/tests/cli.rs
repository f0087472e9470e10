//! Command-level behavior of the `vibci` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vibci_cli::config::PipelineConfig;
use vibci_cli::reports::{ChannelScanReport, OnlineSimReport, PairScanReport, StatsReport};

fn vibci() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vibci"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = vibci().args(args).current_dir(dir).output().expect("spawn vibci");
    assert!(
        out.status.success(),
        "vibci {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str], dir: &Path) -> Output {
    let out = vibci().args(args).current_dir(dir).output().expect("spawn vibci");
    assert!(!out.status.success(), "vibci {args:?} unexpectedly succeeded");
    out
}

/// Small but complete config: 200 Hz source decimated to 100 Hz.
fn mini_config() -> PipelineConfig {
    let default = PipelineConfig::default();
    PipelineConfig {
        subjects: 2,
        subject: vibci_core::synth::SubjectSpec {
            fs_hz: 200.0,
            trials_per_class: 4,
            ..default.subject.clone()
        },
        decimation: 2,
        filter_order: 60,
        train: vibci_cli::config::TrainParams {
            epochs: 3,
            learning_rate: 1e-3,
            ..default.train
        },
        repetitions: 2,
        channels: vec!["AF3".into(), "Oz".into(), "Cz".into()],
        n_perm: 200,
        protocol: vibci_core::online::SessionProtocol { trials_per_class: 2, runs: 2 },
        ..default
    }
}

fn write_config(dir: &Path, config: &PipelineConfig) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, config.to_pretty_json()).unwrap();
    path
}

fn synth_mini(dir: &Path, config: &PipelineConfig) {
    write_config(dir, config);
    run_ok(&["--config", "config.json", "--out", "data", "synth"], dir);
}

#[test]
fn print_default_config_round_trips_with_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["--print-default-config"], dir.path());
    let config: PipelineConfig =
        serde_json::from_slice(&out.stdout).expect("default config parses");
    assert_eq!(config.subjects, 8);
    assert_eq!(config.subject.fs_hz, 1000.0);
    assert_eq!(config.subject.trials_per_class, 50); // 200 trials per subject
    assert_eq!(config.subject.montage.len(), 64);
    assert_eq!(config.train.epochs, 200);
    assert_eq!(config.train.batch_size, 16);
    assert_eq!(config.train.learning_rate, 1e-4);
    assert_eq!(config.decimation, 10);
    assert_eq!(config.filter_order, 200);
    assert_eq!((config.band.low_hz, config.band.high_hz), (0.5, 13.0));
    assert_eq!(config.alpha, 0.01);
    assert_eq!(config.n_perm, 1000);
    assert_eq!(config.win_len_s, 2.0);
    assert_eq!(config.overlap, 0.5);
    assert_eq!(config.train_fraction, 0.8);
    assert_eq!(config.repetitions, 5);
    assert_eq!(config.protocol.trials_per_class, 10);
    assert_eq!(config.protocol.runs, 3);
    assert_eq!(
        config.channels,
        ["Fp1", "Fp2", "AFz", "AF3", "AF4", "POz", "Oz", "O1", "O2", "Iz"]
            .map(String::from)
            .to_vec()
    );
}

#[test]
fn synth_writes_one_directory_per_subject_with_balanced_markers() {
    let dir = tempfile::tempdir().unwrap();
    let config = mini_config();
    synth_mini(dir.path(), &config);
    let data = dir.path().join("data");
    let subjects: Vec<_> = fs::read_dir(&data).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(subjects.len(), 2);

    let rec = vibci_core::data::load_recording(&data.join("sub01")).unwrap();
    let imagery = rec.markers.iter().filter(|m| m.label.is_imagery()).count();
    let rest = rec.markers.len() - imagery;
    assert_eq!(imagery, 16); // 4 trials per class
    assert_eq!(rest, 16);
}

#[test]
fn synth_single_trial_yields_four_imagery_markers() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config();
    config.subjects = 1;
    config.subject.trials_per_class = 1;
    synth_mini(dir.path(), &config);
    let rec = vibci_core::data::load_recording(&dir.path().join("data/sub01")).unwrap();
    let imagery = rec.markers.iter().filter(|m| m.label.is_imagery()).count();
    assert_eq!(imagery, 4);
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config();
    config.subjects = 1;
    write_config(dir.path(), &config);
    run_ok(&["--config", "config.json", "--out", "a", "synth"], dir.path());
    run_ok(&["--config", "config.json", "--out", "b", "synth"], dir.path());
    for file in ["meta.json", "samples.f32le"] {
        let a = fs::read(dir.path().join("a/sub01").join(file)).unwrap();
        let b = fs::read(dir.path().join("b/sub01").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    // A different seed changes the payload.
    run_ok(
        &["--config", "config.json", "--seed", "99", "--out", "c", "synth"],
        dir.path(),
    );
    let a = fs::read(dir.path().join("a/sub01/samples.f32le")).unwrap();
    let c = fs::read(dir.path().join("c/sub01/samples.f32le")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn stats_reports_full_montage_with_exact_alpha_marks() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config();
    config.subjects = 1;
    synth_mini(dir.path(), &config);
    run_ok(
        &["--config", "config.json", "--out", "results", "stats", "--dataset", "data/sub01"],
        dir.path(),
    );
    let report: StatsReport = serde_json::from_str(
        &fs::read_to_string(dir.path().join("results/stats_sub01.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report.overall.len(), 64);
    assert_eq!(report.per_class.len(), 4);
    for class in &report.per_class {
        assert_eq!(class.channels.len(), 64);
    }
    for stat in report.overall.iter().chain(report.per_class.iter().flat_map(|c| &c.channels)) {
        assert_eq!(stat.significant, stat.p_value <= report.alpha, "channel {}", stat.channel);
        assert!(stat.p_value > 0.0 && stat.p_value <= 1.0);
    }
    // The occipital alpha signal makes Oz significant even in a small run.
    let oz = report.overall.iter().find(|s| s.channel == "Oz").unwrap();
    assert!(oz.significant, "Oz p = {}", oz.p_value);
    assert!(report.selected.contains(&"Oz".to_string()));
    // The text rendering exists and lists the subject.
    let text = fs::read_to_string(dir.path().join("results/stats_sub01.txt")).unwrap();
    assert!(text.contains("subject sub01"));
}

#[test]
fn train_then_online_sim_produces_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config();
    config.subjects = 1;
    config.subject.trials_per_class = 6;
    config.train.epochs = 10;
    synth_mini(dir.path(), &config);
    run_ok(
        &["--config", "config.json", "--out", "results", "train", "--dataset", "data/sub01"],
        dir.path(),
    );
    assert!(dir.path().join("results/model/model.json").is_file());
    assert!(dir.path().join("results/model/params.f64le").is_file());
    assert!(dir.path().join("results/model/settings.json").is_file());
    assert!(dir.path().join("results/metrics.json").is_file());

    run_ok(
        &["--config", "config.json", "--out", "results", "online-sim", "--model", "results/model"],
        dir.path(),
    );
    let report: OnlineSimReport = serde_json::from_str(
        &fs::read_to_string(dir.path().join("results/online_sim.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report.runs.len(), 2);
    assert_eq!(report.channels, vec!["AF3".to_string(), "Oz".to_string()]);
    for run in &report.runs {
        assert_eq!(run.total, 8);
        assert_eq!(run.correct, run.trials.iter().filter(|t| t.true_label == t.decoded).count());
        assert_eq!(run.success_rate, run.correct as f64 / run.total as f64);
        assert_eq!(run.display, vibci_core::online::format_success_rate(run.correct, run.total));
        assert_eq!(run.arm_trace.transitions.len(), 2 * run.total);
    }
    let text = fs::read_to_string(dir.path().join("results/online_sim.txt")).unwrap();
    assert!(text.contains("Run1"));
    assert!(text.contains("AF3-Oz"));
}

#[test]
fn channel_scan_headers_match_configured_list_and_pair_scan_defaults_to_top3() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config();
    config.subjects = 1;
    synth_mini(dir.path(), &config);
    run_ok(
        &["--config", "config.json", "--out", "results", "channel-scan", "--dataset", "data"],
        dir.path(),
    );
    let scan: ChannelScanReport = serde_json::from_str(
        &fs::read_to_string(dir.path().join("results/channel_scan.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(scan.report.channels, config.channels);
    let text = fs::read_to_string(dir.path().join("results/channel_scan.txt")).unwrap();
    let header = text.lines().next().unwrap();
    for ch in &config.channels {
        assert!(header.contains(ch.as_str()), "header missing {ch}: {header}");
    }
    // JSON and text agree after display rounding.
    for (c, cell) in scan.report.rows[0].iter().enumerate() {
        let rendered = format!("{:.3} (\u{00b1}{:.3})", cell.mean, cell.std);
        assert!(text.contains(&rendered), "missing cell {c}: {rendered}");
    }

    // Without explicit pairs or a report, pair-scan derives 3 pairs from
    // the scan's top 3 channels.
    run_ok(
        &[
            "--config",
            "config.json",
            "--out",
            "results",
            "pair-scan",
            "--dataset",
            "data",
            "--channel-report",
            "results/channel_scan.json",
        ],
        dir.path(),
    );
    let pairs: PairScanReport = serde_json::from_str(
        &fs::read_to_string(dir.path().join("results/pair_scan.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(pairs.report.pairs.len(), 3);
    let mut seen: Vec<String> = pairs
        .report
        .pairs
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 3, "three pairs over exactly three channels");
}

#[test]
fn report_command_renders_each_kind() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config();
    config.subjects = 1;
    synth_mini(dir.path(), &config);
    run_ok(
        &["--config", "config.json", "--out", "results", "channel-scan", "--dataset", "data"],
        dir.path(),
    );
    let out = run_ok(&["report", "--input", "results/channel_scan.json"], dir.path());
    let rendered = String::from_utf8_lossy(&out.stdout);
    let on_disk = fs::read_to_string(dir.path().join("results/channel_scan.txt")).unwrap();
    assert_eq!(rendered, on_disk);
}

#[test]
fn precondition_violations_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // Odd filter order.
    let mut bad = mini_config();
    bad.filter_order = 61;
    write_config(dir.path(), &bad);
    let out = run_err(&["--config", "config.json", "synth"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("filter_order"));

    // Band above the decimated Nyquist.
    let mut bad = mini_config();
    bad.band = vibci_core::dsp::Band::new(0.5, 60.0);
    write_config(dir.path(), &bad);
    run_err(&["--config", "config.json", "synth"], dir.path());

    // Unknown report kind.
    fs::write(dir.path().join("weird.json"), r#"{"kind": "nope"}"#).unwrap();
    run_err(&["report", "--input", "weird.json"], dir.path());

    // Train on a multi-subject root.
    let config = mini_config();
    synth_mini(dir.path(), &config);
    write_config(dir.path(), &config);
    run_err(
        &["--config", "config.json", "--out", "results", "train", "--dataset", "data"],
        dir.path(),
    );

    // Missing dataset directory.
    run_err(
        &["--config", "config.json", "--out", "results", "stats", "--dataset", "missing"],
        dir.path(),
    );
}
