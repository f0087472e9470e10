//! Command implementations. Every command is reproducible: all randomness
//! derives from the config master seed, and outputs are written with fixed
//! field order so repeated runs emit identical bytes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use vibci_core::augment::augment_dataset;
use vibci_core::cnn::{evaluate, train, Metrics};
use vibci_core::data::{
    epoch, load_recording, save_recording, ClassLabel, EpochedDataset, Recording,
};
use vibci_core::dsp::{band_power, decimate, design_bandpass_fir, filter_recording};
use vibci_core::online::{
    run_online_session, CnnTrialDecoder, OnlinePreprocess, SynthTrialSource,
};
use vibci_core::seed::derive_seed;
use vibci_core::select::{
    pairs_from_top3, scan_pairs, scan_single_channels, ChannelReport, PairReport, ScanConfig,
};
use vibci_core::stats::{permutation_test, significant_channels, TestOptions};
use vibci_core::synth::generate_subject;

use crate::bundle::{load_bundle, save_bundle, ModelBundle};
use crate::config::{PipelineConfig, SelectionMode};
use crate::render;
use crate::reports::{
    ChannelScanReport, ClassStats, OnlineRun, OnlineSimReport, PairScanReport, StatsReport,
    KIND_CHANNEL_SCAN, KIND_ONLINE_SIM, KIND_PAIR_SCAN, KIND_STATS,
};

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    fs::write(path, json)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Resolve a dataset argument: either one recording directory or a root
/// holding one subdirectory per subject.
fn dataset_dirs(root: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    if root.join("meta.json").is_file() {
        let name = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "subject".to_string());
        return Ok(vec![(name, root.to_path_buf())]);
    }
    let mut dirs: Vec<(String, PathBuf)> = fs::read_dir(root)
        .with_context(|| format!("reading dataset root {}", root.display()))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.join("meta.json").is_file())
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned());
            (name.unwrap_or_default(), p)
        })
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("{} holds no dataset (no meta.json found)", root.display());
    }
    Ok(dirs)
}

/// Decimate to the analysis rate and zero-phase band-pass every channel.
fn preprocess_recording(config: &PipelineConfig, recording: &Recording) -> anyhow::Result<Recording> {
    let decimated = decimate(recording, config.decimation)?;
    let fir = design_bandpass_fir(config.band, decimated.fs_hz, config.filter_order)?;
    Ok(filter_recording(&decimated, &fir)?)
}

/// Load one subject, restricted to `channels` before any signal work.
fn load_preprocessed(
    config: &PipelineConfig,
    dir: &Path,
    channels: Option<&[String]>,
) -> anyhow::Result<Recording> {
    let recording = load_recording(dir)?;
    let recording = match channels {
        Some(names) => recording.select_channels_by_name(names)?,
        None => recording,
    };
    preprocess_recording(config, &recording)
}

/// `synth`: one saved recording per subject, seeds derived per subject.
pub fn synth(config: &PipelineConfig, out: &Path) -> anyhow::Result<()> {
    for i in 0..config.subjects {
        let seed = derive_seed(config.master_seed, "subject", i as u64);
        let recording = generate_subject(&config.subject, seed)?;
        let dir = out.join(format!("sub{:02}", i + 1));
        save_recording(&recording, &dir)?;
        println!(
            "wrote {} ({} channels, {} samples at {} Hz, {} markers)",
            dir.display(),
            recording.n_channels(),
            recording.n_samples(),
            recording.fs_hz,
            recording.markers.len()
        );
    }
    Ok(())
}

/// `preprocess`: materialize the decimated, band-passed datasets.
pub fn preprocess(config: &PipelineConfig, dataset: &Path, out: &Path) -> anyhow::Result<()> {
    for (name, dir) in dataset_dirs(dataset)? {
        let processed = load_preprocessed(config, &dir, None)?;
        let target = out.join(&name);
        save_recording(&processed, &target)?;
        println!(
            "wrote {} ({} samples at {} Hz)",
            target.display(),
            processed.n_samples(),
            processed.fs_hz
        );
    }
    Ok(())
}

/// Band power per epoch for every channel of `dataset`.
fn channel_powers(dataset: &EpochedDataset, config: &PipelineConfig) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut powers = vec![Vec::with_capacity(dataset.epochs.len()); dataset.n_channels()];
    for e in &dataset.epochs {
        for (c, channel_powers) in powers.iter_mut().enumerate() {
            let row: Vec<f64> = e.data.row(c).iter().map(|&v| v as f64).collect();
            channel_powers.push(band_power(&row, dataset.fs_hz, config.band)?);
        }
    }
    Ok(powers)
}

/// `stats`: per-class and pooled permutation tests, one report per subject.
pub fn stats(config: &PipelineConfig, dataset: &Path, out: &Path) -> anyhow::Result<()> {
    for (subject_idx, (name, dir)) in dataset_dirs(dataset)?.into_iter().enumerate() {
        let recording = load_preprocessed(config, &dir, None)?;
        let ds = epoch(&recording, config.subject.epoch_len_s, config.epoch_offset_s)?;
        let channel_names = recording.montage.names().to_vec();
        let rest_powers = channel_powers(&ds.with_label(ClassLabel::Rest), config)?;

        let mut per_class = Vec::with_capacity(4);
        let mut significant_sets: Vec<BTreeSet<String>> = Vec::with_capacity(4);
        for (k, label) in ClassLabel::IMAGERY.iter().enumerate() {
            let imagery_powers = channel_powers(&ds.with_label(*label), config)?;
            let options = TestOptions {
                n_perm: config.n_perm,
                alpha: config.alpha,
                bonferroni: config.bonferroni,
                seed: derive_seed(
                    config.master_seed,
                    "stats",
                    (subject_idx * 5 + k) as u64,
                ),
            };
            let stats = permutation_test(&channel_names, &imagery_powers, &rest_powers, &options)?;
            significant_sets.push(
                significant_channels(&stats, effective_alpha(config, channel_names.len()))
                    .into_iter()
                    .collect(),
            );
            per_class.push(ClassStats { class: *label, channels: stats });
        }

        let imagery_powers = channel_powers(&ds.imagery_only(), config)?;
        let options = TestOptions {
            n_perm: config.n_perm,
            alpha: config.alpha,
            bonferroni: config.bonferroni,
            seed: derive_seed(config.master_seed, "stats", (subject_idx * 5 + 4) as u64),
        };
        let overall = permutation_test(&channel_names, &imagery_powers, &rest_powers, &options)?;

        // Combine the per-class significant sets; report in montage order.
        let combined: BTreeSet<String> = match config.selection_mode {
            SelectionMode::Union => significant_sets.iter().flatten().cloned().collect(),
            SelectionMode::Intersection => significant_sets
                .iter()
                .skip(1)
                .fold(significant_sets[0].clone(), |acc, set| {
                    acc.intersection(set).cloned().collect()
                }),
        };
        let selected: Vec<String> = channel_names
            .iter()
            .filter(|name| combined.contains(*name))
            .cloned()
            .collect();

        let report = StatsReport {
            kind: KIND_STATS.to_string(),
            subject: name.clone(),
            band: config.band,
            alpha: config.alpha,
            n_perm: config.n_perm,
            bonferroni: config.bonferroni,
            selection_mode: config.selection_mode,
            per_class,
            overall,
            selected,
        };
        write_json(&out.join(format!("stats_{name}.json")), &report)?;
        write_text(&out.join(format!("stats_{name}.txt")), &render::stats_table(&report))?;
    }
    Ok(())
}

fn effective_alpha(config: &PipelineConfig, n_channels: usize) -> f64 {
    if config.bonferroni {
        config.alpha / n_channels as f64
    } else {
        config.alpha
    }
}

fn scan_config(config: &PipelineConfig, seed: u64) -> ScanConfig {
    ScanConfig {
        train: config.train.with_seed(seed),
        train_fraction: config.train_fraction,
        win_len_s: config.win_len_s,
        overlap: config.overlap,
        repetitions: config.repetitions,
    }
}

fn scan_all_subjects(
    config: &PipelineConfig,
    dataset: &Path,
) -> anyhow::Result<ChannelReport> {
    let mut reports = Vec::new();
    for (subject_idx, (name, dir)) in dataset_dirs(dataset)?.into_iter().enumerate() {
        let recording = load_preprocessed(config, &dir, Some(&config.channels))?;
        let ds = epoch(&recording, config.subject.epoch_len_s, config.epoch_offset_s)?
            .imagery_only();
        let seed = derive_seed(config.master_seed, "channel-scan", subject_idx as u64);
        reports.push(scan_single_channels(
            &name,
            &ds,
            &config.channels,
            &scan_config(config, seed),
        )?);
        eprintln!("scanned {name}");
    }
    Ok(ChannelReport::merge(&reports)?)
}

/// `channel-scan`: per-channel decoder accuracies over every subject.
pub fn channel_scan(config: &PipelineConfig, dataset: &Path, out: &Path) -> anyhow::Result<()> {
    let report = scan_all_subjects(config, dataset)?;
    let wrapped = ChannelScanReport { kind: KIND_CHANNEL_SCAN.to_string(), report };
    write_json(&out.join("channel_scan.json"), &wrapped)?;
    write_text(&out.join("channel_scan.txt"), &render::channel_table(&wrapped.report))?;
    Ok(())
}

/// `pair-scan`: channel-pair accuracies. Pairs come from the config, from
/// a previous channel-scan report, or from a fresh scan's top 3.
pub fn pair_scan(
    config: &PipelineConfig,
    dataset: &Path,
    channel_report: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    let pairs = match (&config.pairs, channel_report) {
        (Some(pairs), _) => pairs.clone(),
        (None, Some(path)) => {
            let wrapped: ChannelScanReport =
                serde_json::from_str(&fs::read_to_string(path)?)
                    .with_context(|| format!("parsing channel report {}", path.display()))?;
            pairs_from_top3(&wrapped.report)
        }
        (None, None) => pairs_from_top3(&scan_all_subjects(config, dataset)?),
    };
    if pairs.is_empty() {
        bail!("no channel pairs to scan");
    }

    let mut reports = Vec::new();
    for (subject_idx, (name, dir)) in dataset_dirs(dataset)?.into_iter().enumerate() {
        let mut needed: Vec<String> = Vec::new();
        for (a, b) in &pairs {
            for ch in [a, b] {
                if !needed.contains(ch) {
                    needed.push(ch.clone());
                }
            }
        }
        let recording = load_preprocessed(config, &dir, Some(&needed))?;
        let ds = epoch(&recording, config.subject.epoch_len_s, config.epoch_offset_s)?
            .imagery_only();
        let seed = derive_seed(config.master_seed, "pair-scan", subject_idx as u64);
        reports.push(scan_pairs(&name, &ds, &pairs, &scan_config(config, seed))?);
        eprintln!("scanned {name}");
    }
    let report = PairReport::merge(&reports)?;
    let wrapped = PairScanReport { kind: KIND_PAIR_SCAN.to_string(), report };
    write_json(&out.join("pair_scan.json"), &wrapped)?;
    write_text(&out.join("pair_scan.txt"), &render::pair_table(&wrapped.report))?;
    Ok(())
}

/// `train`: fit the decoder on one subject's `train_channels`, report
/// held-out metrics, and save the model bundle.
pub fn train_command(config: &PipelineConfig, dataset: &Path, out: &Path) -> anyhow::Result<()> {
    let dirs = dataset_dirs(dataset)?;
    if dirs.len() != 1 {
        bail!(
            "train expects one subject dataset, found {} under {}",
            dirs.len(),
            dataset.display()
        );
    }
    let (name, dir) = &dirs[0];
    let recording = load_preprocessed(config, dir, Some(&config.train_channels))?;
    let ds = epoch(&recording, config.subject.epoch_len_s, config.epoch_offset_s)?
        .imagery_only();
    let (train_set, test_set) = vibci_core::data::split_trials(
        &ds,
        config.train_fraction,
        derive_seed(config.master_seed, "train-split", 0),
    )?;
    let train_windows = augment_dataset(&train_set, config.win_len_s, config.overlap)?;
    let test_windows = augment_dataset(&test_set, config.win_len_s, config.overlap)?;

    let train_config = config
        .train
        .with_seed(derive_seed(config.master_seed, "train", 0));
    let (model, loss_history) = train(&train_windows, &train_config)?;
    let mut metrics: Metrics = evaluate(&model, &test_windows)?;
    metrics.loss_history = loss_history;

    let model_dir = out.join("model");
    let bundle = ModelBundle {
        kind: "model_bundle".to_string(),
        channels: config.train_channels.clone(),
        source_fs_hz: config.subject.fs_hz,
        decimation: config.decimation,
        band: config.band,
        filter_order: config.filter_order,
        epoch_len_s: config.subject.epoch_len_s,
        win_len_s: config.win_len_s,
        overlap: config.overlap,
        online_pad_s: config.online_pad_s,
        train: config.train,
        master_seed: config.master_seed,
    };
    save_bundle(&model_dir, &model, &bundle)?;
    println!("wrote {}", model_dir.display());
    write_json(&out.join("metrics.json"), &metrics)?;
    println!(
        "trained on {name}: window accuracy {:.3}, trial accuracy {:.3}",
        metrics.window_accuracy, metrics.trial_accuracy
    );
    Ok(())
}

/// `online-sim`: run the cued online protocol against freshly generated
/// trials, one session per run.
pub fn online_sim(config: &PipelineConfig, model_dir: &Path, out: &Path) -> anyhow::Result<()> {
    let (model, bundle) = load_bundle(model_dir)?;
    if (bundle.source_fs_hz - config.subject.fs_hz).abs() > 1e-9 {
        bail!(
            "model was trained from {} Hz recordings, config generates {} Hz",
            bundle.source_fs_hz,
            config.subject.fs_hz
        );
    }
    let channel_indices = config.subject.montage.indices_of(&bundle.channels)?;
    let montage = config.subject.montage.select(&channel_indices)?;
    let decoder = CnnTrialDecoder {
        model,
        montage,
        preprocess: OnlinePreprocess {
            decimation: bundle.decimation,
            band: bundle.band,
            filter_order: bundle.filter_order,
            pad_s: bundle.online_pad_s,
            epoch_len_s: bundle.epoch_len_s,
        },
        win_len_s: bundle.win_len_s,
        overlap: bundle.overlap,
    };

    let mut runs = Vec::with_capacity(config.protocol.runs);
    for run_idx in 0..config.protocol.runs {
        let session_seed = derive_seed(config.master_seed, "session", run_idx as u64);
        let mut source = SynthTrialSource {
            spec: config.subject.clone(),
            channel_indices: channel_indices.clone(),
            session_seed,
            pad_s: bundle.online_pad_s,
        };
        let (report, arm_trace) =
            run_online_session(&mut source, &decoder, &config.protocol, session_seed)?;
        println!("Run{}  {}", run_idx + 1, report.display_rate());
        runs.push(OnlineRun {
            run: run_idx + 1,
            correct: report.correct,
            total: report.total,
            success_rate: report.success_rate,
            display: report.display_rate(),
            trials: report.trials,
            arm_trace,
        });
    }
    let report = OnlineSimReport {
        kind: KIND_ONLINE_SIM.to_string(),
        channels: bundle.channels.clone(),
        snr: config.subject.snr,
        runs,
    };
    write_json(&out.join("online_sim.json"), &report)?;
    write_text(&out.join("online_sim.txt"), &render::online_table(&report))?;
    Ok(())
}

/// `report`: render any emitted JSON report as its text table.
pub fn report(input: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(input)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .with_context(|| format!("{} has no report kind", input.display()))?;
    let rendered = match kind {
        KIND_STATS => render::stats_table(&serde_json::from_str::<StatsReport>(&text)?),
        KIND_CHANNEL_SCAN => {
            render::channel_table(&serde_json::from_str::<ChannelScanReport>(&text)?.report)
        }
        KIND_PAIR_SCAN => {
            render::pair_table(&serde_json::from_str::<PairScanReport>(&text)?.report)
        }
        KIND_ONLINE_SIM => render::online_table(&serde_json::from_str::<OnlineSimReport>(&text)?),
        other => bail!("unknown report kind {other}"),
    };
    print!("{rendered}");
    Ok(())
}
