//! Pipeline configuration file: one JSON document holding every knob, with
//! defaults embedded so `--print-default-config` documents the schema.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use vibci_core::augment::window_geometry;
use vibci_core::cnn::{Architecture, TrainConfig};
use vibci_core::dsp::Band;
use vibci_core::online::SessionProtocol;
use vibci_core::synth::SubjectSpec;

/// Decoder training knobs as stored in the config file. The seed is not a
/// field: every command derives its training seeds from the master seed.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainParams {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            eps: t.eps,
        }
    }
}

impl TrainParams {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            seed,
        }
    }
}

/// How the per-class significant-channel sets combine into one shortlist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Union,
    Intersection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Synthetic subjects generated by `synth`.
    pub subjects: usize,
    /// Generator settings shared by every subject (seeds differ).
    pub subject: SubjectSpec,
    /// Analysis band-pass edges.
    pub band: Band,
    /// Integer decimation factor applied before filtering.
    pub decimation: usize,
    /// Band-pass FIR order at the decimated rate.
    pub filter_order: usize,
    /// Epoch cut offset after each marker.
    pub epoch_offset_s: f64,
    /// Sliding-window length and overlap for augmentation.
    pub win_len_s: f64,
    pub overlap: f64,
    pub train: TrainParams,
    /// Trial fraction assigned to training in splits.
    pub train_fraction: f64,
    /// Scan repetitions behind each reported mean and std.
    pub repetitions: usize,
    /// Channel shortlist scanned by `channel-scan`.
    pub channels: Vec<String>,
    /// Channels used by `train` (the online decoder's montage).
    pub train_channels: Vec<String>,
    /// Pair list for `pair-scan`; when absent the top-3 single channels
    /// supply all unordered pairs.
    pub pairs: Option<Vec<(String, String)>>,
    /// Significance threshold for the permutation test.
    pub alpha: f64,
    pub n_perm: usize,
    pub bonferroni: bool,
    pub selection_mode: SelectionMode,
    pub protocol: SessionProtocol,
    /// Background context on each side of an online trial.
    pub online_pad_s: f64,
    pub master_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            subjects: 8,
            subject: SubjectSpec::default_subject(),
            band: Band::new(0.5, 13.0),
            decimation: 10,
            filter_order: 200,
            epoch_offset_s: 0.0,
            win_len_s: 2.0,
            overlap: 0.5,
            train: TrainParams::default(),
            train_fraction: 0.8,
            repetitions: 5,
            channels: ["Fp1", "Fp2", "AFz", "AF3", "AF4", "POz", "Oz", "O1", "O2", "Iz"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            train_channels: vec!["AF3".to_string(), "Oz".to_string()],
            pairs: None,
            alpha: 0.01,
            n_perm: 1000,
            bonferroni: false,
            selection_mode: SelectionMode::Union,
            protocol: SessionProtocol::default(),
            online_pad_s: 2.0,
            master_seed: 7,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: PipelineConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(config)
    }

    /// Sampling rate after decimation; every analysis step runs here.
    pub fn analysis_fs_hz(&self) -> f64 {
        self.subject.fs_hz / self.decimation as f64
    }

    /// Check every field against the preconditions of the module that
    /// consumes it, before any computation starts.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.subjects == 0 {
            bail!("subjects must be >= 1");
        }
        self.subject.validate()?;
        if self.decimation == 0 {
            bail!("decimation must be >= 1");
        }
        let fs = self.analysis_fs_hz();
        self.band.validate(fs)?;
        if self.filter_order < 2 || !self.filter_order.is_multiple_of(2) {
            bail!("filter_order must be even and >= 2");
        }
        if self.epoch_offset_s < 0.0 {
            bail!("epoch_offset_s must be nonnegative");
        }
        let (win_samples, _) = window_geometry(fs, self.win_len_s, self.overlap)?;
        if self.win_len_s > self.subject.epoch_len_s {
            bail!("window longer than the imagery epoch");
        }
        // The decoder blocks must fit the window at the analysis rate.
        Architecture::with_default_blocks(1, win_samples)?;
        self.train.with_seed(0).validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie strictly between 0 and 1");
        }
        if self.repetitions == 0 {
            bail!("repetitions must be >= 1");
        }
        if self.channels.is_empty() {
            bail!("channel shortlist is empty");
        }
        for ch in &self.channels {
            self.subject.montage.index_of(ch)?;
        }
        if self.train_channels.is_empty() {
            bail!("train_channels is empty");
        }
        for ch in &self.train_channels {
            self.subject.montage.index_of(ch)?;
        }
        for (i, a) in self.train_channels.iter().enumerate() {
            if self.train_channels[..i].contains(a) {
                bail!("train_channels repeats {a}");
            }
        }
        if let Some(pairs) = &self.pairs {
            for (a, b) in pairs {
                if a == b {
                    bail!("pair ({a}, {b}) repeats a channel");
                }
                self.subject.montage.index_of(a)?;
                self.subject.montage.index_of(b)?;
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            bail!("alpha must lie in (0, 1]");
        }
        if self.n_perm < 100 {
            bail!("n_perm must be >= 100");
        }
        self.protocol.validate()?;
        if self.online_pad_s < 0.0 {
            bail!("online_pad_s must be nonnegative");
        }
        // Online trials must be long enough for zero-phase filtering.
        let online_samples =
            ((2.0 * self.online_pad_s + self.subject.epoch_len_s) * fs).round() as usize;
        if online_samples <= 3 * (self.filter_order + 1) {
            bail!(
                "online trial of {online_samples} samples too short for order {} filtering; \
                 increase online_pad_s or lower filter_order",
                self.filter_order
            );
        }
        Ok(())
    }

    pub fn to_pretty_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}
