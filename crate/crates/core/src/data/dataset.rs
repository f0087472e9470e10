use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::{ClassLabel, Montage, Recording};
use crate::error::{Error, Result};

/// One labeled trial cut from a recording.
///
/// `trial_id` is assigned at epoching time and preserved through splits and
/// channel restriction, so window-to-trial attribution survives the whole
/// pipeline.
#[derive(Clone, Debug)]
pub struct Epoch {
    pub data: Array2<f32>,
    pub label: ClassLabel,
    pub trial_id: usize,
}

/// Labeled fixed-length trials sharing one shape.
#[derive(Clone, Debug)]
pub struct EpochedDataset {
    pub montage: Montage,
    pub fs_hz: f64,
    pub epochs: Vec<Epoch>,
    pub epoch_len_s: f64,
}

impl EpochedDataset {
    pub fn n_channels(&self) -> usize {
        self.montage.len()
    }

    pub fn epoch_samples(&self) -> usize {
        self.epochs.first().map_or(0, |e| e.data.ncols())
    }

    /// Trials per label, for every label present.
    pub fn class_counts(&self) -> BTreeMap<ClassLabel, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.epochs {
            *counts.entry(e.label).or_insert(0) += 1;
        }
        counts
    }

    /// Keep only the four imagery labels (drops Rest epochs).
    pub fn imagery_only(&self) -> EpochedDataset {
        EpochedDataset {
            montage: self.montage.clone(),
            fs_hz: self.fs_hz,
            epochs: self
                .epochs
                .iter()
                .filter(|e| e.label.is_imagery())
                .cloned()
                .collect(),
            epoch_len_s: self.epoch_len_s,
        }
    }

    /// Keep only epochs with the given label.
    pub fn with_label(&self, label: ClassLabel) -> EpochedDataset {
        EpochedDataset {
            montage: self.montage.clone(),
            fs_hz: self.fs_hz,
            epochs: self.epochs.iter().filter(|e| e.label == label).cloned().collect(),
            epoch_len_s: self.epoch_len_s,
        }
    }

    /// Restrict every trial to a channel subset by montage index.
    pub fn select_channels(&self, indices: &[usize]) -> Result<EpochedDataset> {
        let montage = self.montage.select(indices)?;
        let epochs = self
            .epochs
            .iter()
            .map(|e| {
                let mut data = Array2::zeros((indices.len(), e.data.ncols()));
                for (row, &src) in indices.iter().enumerate() {
                    data.row_mut(row).assign(&e.data.row(src));
                }
                Epoch { data, label: e.label, trial_id: e.trial_id }
            })
            .collect();
        Ok(EpochedDataset {
            montage,
            fs_hz: self.fs_hz,
            epochs,
            epoch_len_s: self.epoch_len_s,
        })
    }

    pub fn select_channels_by_name(&self, names: &[String]) -> Result<EpochedDataset> {
        let indices = self.montage.indices_of(names)?;
        self.select_channels(&indices)
    }
}

/// One fixed-length training window with its trial attribution.
#[derive(Clone, Debug)]
pub struct Window {
    pub data: Array2<f32>,
    pub label: ClassLabel,
    pub source_trial_id: usize,
}

/// Sliding-window view of an epoched dataset.
#[derive(Clone, Debug)]
pub struct WindowedDataset {
    pub windows: Vec<Window>,
    pub win_len_s: f64,
    pub overlap_fraction: f64,
}

impl WindowedDataset {
    pub fn n_channels(&self) -> usize {
        self.windows.first().map_or(0, |w| w.data.nrows())
    }

    pub fn win_samples(&self) -> usize {
        self.windows.first().map_or(0, |w| w.data.ncols())
    }

    pub fn class_counts(&self) -> BTreeMap<ClassLabel, usize> {
        let mut counts = BTreeMap::new();
        for w in &self.windows {
            *counts.entry(w.label).or_insert(0) += 1;
        }
        counts
    }
}

/// Convert `seconds` to an exact sample count at `fs_hz`, rejecting
/// non-integer products rather than silently truncating.
pub(crate) fn seconds_to_samples(seconds: f64, fs_hz: f64, what: &str) -> Result<usize> {
    if seconds < 0.0 {
        return Err(Error::invalid(format!("{what} must be nonnegative")));
    }
    let exact = seconds * fs_hz;
    let rounded = exact.round();
    if (exact - rounded).abs() > 1e-9 * exact.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "{what} of {seconds} s is not an integer number of samples at {fs_hz} Hz"
        )));
    }
    Ok(rounded as usize)
}

/// Cut one epoch per marker: `epoch_len_s` seconds starting at
/// `onset + offset_s`. Labels are copied from the markers.
pub fn epoch(recording: &Recording, epoch_len_s: f64, offset_s: f64) -> Result<EpochedDataset> {
    if !epoch_len_s.is_finite() || epoch_len_s <= 0.0 {
        return Err(Error::invalid("epoch length must be positive"));
    }
    let len = seconds_to_samples(epoch_len_s, recording.fs_hz, "epoch length")?;
    let offset = seconds_to_samples(offset_s, recording.fs_hz, "epoch offset")?;
    let n = recording.n_samples();
    let mut epochs = Vec::with_capacity(recording.markers.len());
    for (trial_id, marker) in recording.markers.iter().enumerate() {
        let start = marker.onset + offset;
        let end = start + len;
        if end > n {
            return Err(Error::OutOfRange(format!(
                "epoch at marker {} ({}..{end}) overruns recording end {n}",
                marker.onset, start
            )));
        }
        epochs.push(Epoch {
            data: recording.samples.slice(s![.., start..end]).to_owned(),
            label: marker.label,
            trial_id,
        });
    }
    Ok(EpochedDataset {
        montage: recording.montage.clone(),
        fs_hz: recording.fs_hz,
        epochs,
        epoch_len_s,
    })
}

/// Trial-level train/test split, stratified per class and deterministic for
/// a given seed. Train and test trial id sets are disjoint and exhaustive.
pub fn split_trials(
    dataset: &EpochedDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(EpochedDataset, EpochedDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie strictly between 0 and 1"));
    }
    let mut by_class: BTreeMap<ClassLabel, Vec<usize>> = BTreeMap::new();
    for (i, e) in dataset.epochs.iter().enumerate() {
        by_class.entry(e.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    // BTreeMap iteration keeps the class order fixed, so one sequential rng
    // is deterministic.
    for (label, mut indices) in by_class {
        if indices.len() < 2 {
            return Err(Error::invalid(format!(
                "class {label} has {} trial(s); need at least 2 to split",
                indices.len()
            )));
        }
        indices.shuffle(&mut rng);
        let n = indices.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
        train_idx.extend_from_slice(&indices[..n_train]);
        test_idx.extend_from_slice(&indices[n_train..]);
    }
    // Restore epoch order within each side so output is independent of the
    // shuffle order.
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| EpochedDataset {
        montage: dataset.montage.clone(),
        fs_hz: dataset.fs_hz,
        epochs: idx.iter().map(|&i| dataset.epochs[i].clone()).collect(),
        epoch_len_s: dataset.epoch_len_s,
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}
