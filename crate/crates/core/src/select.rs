//! Channel optimization: per-channel decoder scans, ranking, and
//! channel-pair scans.
//!
//! Every (channel, repetition) cell of a scan owns a derived seed, so the
//! grid can run in parallel and still equal the sequential run exactly.
//! Repetition `r` uses `master_seed + r`: the trial split is shared by all
//! channels within a repetition (paired comparisons), while training seeds
//! are derived per cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::augment_dataset;
use crate::cnn::{evaluate, train, TrainConfig};
use crate::data::{split_trials, EpochedDataset};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Scan settings shared by single-channel and pair scans.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanConfig {
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub win_len_s: f64,
    pub overlap: f64,
    pub repetitions: usize,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie strictly between 0 and 1"));
        }
        if self.repetitions < 1 {
            return Err(Error::invalid("repetitions must be >= 1"));
        }
        Ok(())
    }
}

/// Mean and standard deviation of trial accuracy over repetitions
/// (population std, so a single repetition reports 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub mean: f64,
    pub std: f64,
}

impl CellStat {
    fn from_samples(values: &[f64]) -> CellStat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        CellStat { mean, std: var.sqrt() }
    }
}

/// Per-subject, per-channel accuracies plus the per-channel averages row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channels: Vec<String>,
    pub subjects: Vec<String>,
    /// `rows[subject][channel]`
    pub rows: Vec<Vec<CellStat>>,
    /// Mean accuracy per channel over subjects.
    pub averages: Vec<f64>,
}

impl ChannelReport {
    pub fn from_rows(
        channels: Vec<String>,
        subjects: Vec<String>,
        rows: Vec<Vec<CellStat>>,
    ) -> Result<Self> {
        if rows.len() != subjects.len() || rows.iter().any(|r| r.len() != channels.len()) {
            return Err(Error::ShapeMismatch("report rows do not match labels".into()));
        }
        let averages = (0..channels.len())
            .map(|c| rows.iter().map(|r| r[c].mean).sum::<f64>() / rows.len() as f64)
            .collect();
        Ok(ChannelReport { channels, subjects, rows, averages })
    }

    /// Stack several single-subject reports over the same channel list.
    pub fn merge(reports: &[ChannelReport]) -> Result<ChannelReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::invalid("no reports to merge"))?;
        let mut subjects = Vec::new();
        let mut rows = Vec::new();
        for report in reports {
            if report.channels != first.channels {
                return Err(Error::invalid("reports scan different channel lists"));
            }
            subjects.extend(report.subjects.iter().cloned());
            rows.extend(report.rows.iter().cloned());
        }
        ChannelReport::from_rows(first.channels.clone(), subjects, rows)
    }

    /// Mean repetition std per channel (tie-break key for ranking).
    fn mean_stds(&self) -> Vec<f64> {
        (0..self.channels.len())
            .map(|c| self.rows.iter().map(|r| r[c].std).sum::<f64>() / self.rows.len() as f64)
            .collect()
    }
}

/// Per-subject, per-pair accuracies plus the per-subject average column.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairReport {
    pub pairs: Vec<(String, String)>,
    pub subjects: Vec<String>,
    /// `rows[subject][pair]`
    pub rows: Vec<Vec<CellStat>>,
    /// Mean accuracy per subject over pairs.
    pub subject_averages: Vec<f64>,
}

impl PairReport {
    pub fn from_rows(
        pairs: Vec<(String, String)>,
        subjects: Vec<String>,
        rows: Vec<Vec<CellStat>>,
    ) -> Result<Self> {
        if rows.len() != subjects.len() || rows.iter().any(|r| r.len() != pairs.len()) {
            return Err(Error::ShapeMismatch("report rows do not match labels".into()));
        }
        let subject_averages = rows
            .iter()
            .map(|r| r.iter().map(|c| c.mean).sum::<f64>() / r.len() as f64)
            .collect();
        Ok(PairReport { pairs, subjects, rows, subject_averages })
    }

    pub fn merge(reports: &[PairReport]) -> Result<PairReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::invalid("no reports to merge"))?;
        let mut subjects = Vec::new();
        let mut rows = Vec::new();
        for report in reports {
            if report.pairs != first.pairs {
                return Err(Error::invalid("reports scan different pair lists"));
            }
            subjects.extend(report.subjects.iter().cloned());
            rows.extend(report.rows.iter().cloned());
        }
        PairReport::from_rows(first.pairs.clone(), subjects, rows)
    }
}

/// Split, augment, train, and evaluate one restricted dataset once.
/// Returns trial-level accuracy (majority vote over a trial's windows).
fn run_cell(
    restricted: &EpochedDataset,
    config: &ScanConfig,
    split_seed: u64,
    train_seed: u64,
) -> Result<f64> {
    let (train_set, test_set) = split_trials(restricted, config.train_fraction, split_seed)?;
    let train_windows = augment_dataset(&train_set, config.win_len_s, config.overlap)?;
    let test_windows = augment_dataset(&test_set, config.win_len_s, config.overlap)?;
    let train_config = TrainConfig { seed: train_seed, ..config.train };
    let (model, _) = train(&train_windows, &train_config)?;
    let metrics = evaluate(&model, &test_windows)?;
    Ok(metrics.trial_accuracy)
}

/// Evaluate a channel subset over all repetitions. `index` keys this
/// subset's training seeds (channel index for single scans, pair index for
/// pair scans).
fn scan_subset(
    dataset: &EpochedDataset,
    subset: &[String],
    index: usize,
    config: &ScanConfig,
) -> Result<CellStat> {
    let restricted = dataset.select_channels_by_name(subset)?;
    let accuracies: Vec<f64> = (0..config.repetitions)
        .map(|rep| {
            let rep_seed = config.train.seed.wrapping_add(rep as u64);
            run_cell(
                &restricted,
                config,
                derive_seed(rep_seed, "scan-split", 0),
                derive_seed(rep_seed, "scan-train", index as u64),
            )
        })
        .collect::<Result<_>>()?;
    Ok(CellStat::from_samples(&accuracies))
}

/// Train and evaluate a decoder on each channel alone, `repetitions` times
/// per channel; one subject row.
pub fn scan_single_channels(
    subject: &str,
    dataset: &EpochedDataset,
    channels: &[String],
    config: &ScanConfig,
) -> Result<ChannelReport> {
    config.validate()?;
    dataset.montage.indices_of(channels)?; // fail fast on unknown labels
    let cells: Vec<CellStat> = channels
        .par_iter()
        .enumerate()
        .map(|(i, ch)| scan_subset(dataset, std::slice::from_ref(ch), i, config))
        .collect::<Result<_>>()?;
    ChannelReport::from_rows(channels.to_vec(), vec![subject.to_string()], vec![cells])
}

/// Top-k channels by average accuracy (descending); ties break toward the
/// lower mean std, then toward the report's channel order.
pub fn rank_channels(report: &ChannelReport, k: usize) -> Vec<String> {
    let stds = report.mean_stds();
    let mut order: Vec<usize> = (0..report.channels.len()).collect();
    order.sort_by(|&a, &b| {
        report.averages[b]
            .total_cmp(&report.averages[a])
            .then(stds[a].total_cmp(&stds[b]))
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| report.channels[i].clone())
        .collect()
}

/// All unordered pairs among the top-3 channels of a report.
pub fn pairs_from_top3(report: &ChannelReport) -> Vec<(String, String)> {
    let top = rank_channels(report, 3.min(report.channels.len()));
    let mut pairs = Vec::new();
    for i in 0..top.len() {
        for j in (i + 1)..top.len() {
            pairs.push((top[i].clone(), top[j].clone()));
        }
    }
    pairs
}

/// Train and evaluate a decoder on each channel pair; one subject row.
pub fn scan_pairs(
    subject: &str,
    dataset: &EpochedDataset,
    pairs: &[(String, String)],
    config: &ScanConfig,
) -> Result<PairReport> {
    config.validate()?;
    for (a, b) in pairs {
        if a == b {
            return Err(Error::invalid(format!("pair ({a}, {b}) repeats a channel")));
        }
        dataset.montage.index_of(a)?;
        dataset.montage.index_of(b)?;
    }
    let cells: Vec<CellStat> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| scan_subset(dataset, &[a.clone(), b.clone()], i, config))
        .collect::<Result<_>>()?;
    PairReport::from_rows(pairs.to_vec(), vec![subject.to_string()], vec![cells])
}
