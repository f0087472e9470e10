//! Sliding-window augmentation: fixed-length overlapping windows cut from
//! each trial to multiply the training data.

use ndarray::{s, Array2};

use crate::data::{seconds_to_samples, EpochedDataset, Window, WindowedDataset};
use crate::error::{Error, Result};

/// Window and step sizes in samples for a window spec at a given rate.
/// Both must come out as positive integers.
pub fn window_geometry(fs_hz: f64, win_len_s: f64, overlap: f64) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    let win = seconds_to_samples(win_len_s, fs_hz, "window length")?;
    let step = seconds_to_samples((1.0 - overlap) * win_len_s, fs_hz, "window step")?;
    if win == 0 || step == 0 {
        return Err(Error::invalid("window and step must be positive"));
    }
    Ok((win, step))
}

/// Cut complete sliding windows from one trial. Windows start at
/// `0, step, 2*step, ...`; the count is `floor((samples - win) / step) + 1`.
pub fn sliding_windows(
    trial: &Array2<f32>,
    fs_hz: f64,
    win_len_s: f64,
    overlap: f64,
) -> Result<Vec<Array2<f32>>> {
    let (win, step) = window_geometry(fs_hz, win_len_s, overlap)?;
    let n = trial.ncols();
    if n < win {
        return Err(Error::invalid(format!(
            "trial of {n} samples is shorter than one {win}-sample window"
        )));
    }
    let count = (n - win) / step + 1;
    Ok((0..count)
        .map(|k| trial.slice(s![.., k * step..k * step + win]).to_owned())
        .collect())
}

/// Window every trial of a dataset. Window order is deterministic: trial
/// order, then start time. Each window carries its trial's label and id.
pub fn augment_dataset(
    dataset: &EpochedDataset,
    win_len_s: f64,
    overlap: f64,
) -> Result<WindowedDataset> {
    let mut windows = Vec::new();
    for epoch in &dataset.epochs {
        for data in sliding_windows(&epoch.data, dataset.fs_hz, win_len_s, overlap)? {
            windows.push(Window {
                data,
                label: epoch.label,
                source_trial_id: epoch.trial_id,
            });
        }
    }
    Ok(WindowedDataset {
        windows,
        win_len_s,
        overlap_fraction: overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{epoch, ClassLabel, Marker, Montage, Recording};
    use proptest::prelude::*;

    fn counting_trial(channels: usize, samples: usize) -> Array2<f32> {
        Array2::from_shape_fn((channels, samples), |(c, t)| (c * samples + t) as f32)
    }

    #[test]
    fn four_second_trial_gives_three_windows() {
        let trial = counting_trial(2, 400); // 4 s at 100 Hz
        let wins = sliding_windows(&trial, 100.0, 2.0, 0.5).unwrap();
        assert_eq!(wins.len(), 3);
        // Starts at 0 s, 1 s, 2 s.
        assert_eq!(wins[0][[0, 0]], 0.0);
        assert_eq!(wins[1][[0, 0]], 100.0);
        assert_eq!(wins[2][[0, 0]], 200.0);
    }

    #[test]
    fn exact_fit_gives_one_window() {
        let trial = counting_trial(1, 200);
        let wins = sliding_windows(&trial, 100.0, 2.0, 0.5).unwrap();
        assert_eq!(wins.len(), 1);
    }

    #[test]
    fn residual_tail_is_dropped() {
        let trial = counting_trial(1, 550); // 5.5 s at 100 Hz
        let wins = sliding_windows(&trial, 100.0, 2.0, 0.5).unwrap();
        assert_eq!(wins.len(), 4); // floor((550 - 200) / 100) + 1
    }

    #[test]
    fn short_trial_is_error() {
        let trial = counting_trial(1, 150);
        assert!(sliding_windows(&trial, 100.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn windows_match_source_slices() {
        let trial = counting_trial(3, 430);
        let wins = sliding_windows(&trial, 100.0, 2.0, 0.5).unwrap();
        for (k, w) in wins.iter().enumerate() {
            let expect = trial.slice(s![.., k * 100..k * 100 + 200]);
            assert_eq!(w, &expect.to_owned());
        }
    }

    fn dataset_of_trials(n_trials: usize, trial_s: f64, fs: f64) -> EpochedDataset {
        let montage = Montage::new(["A"]).unwrap();
        let trial_len = (trial_s * fs) as usize;
        let total = n_trials * trial_len;
        let samples = Array2::<f32>::zeros((1, total));
        let markers = (0..n_trials)
            .map(|k| Marker {
                onset: k * trial_len,
                label: ClassLabel::IMAGERY[k % 4],
            })
            .collect();
        let rec = Recording::new(montage, fs, samples, markers).unwrap();
        epoch(&rec, trial_s, 0.0).unwrap()
    }

    #[test]
    fn window_counts_scale_with_trials() {
        let ds = dataset_of_trials(160, 4.0, 100.0);
        let wd = augment_dataset(&ds, 2.0, 0.5).unwrap();
        assert_eq!(wd.windows.len(), 480);
        // Per class: 40 trials x 3 windows.
        for (_, count) in wd.class_counts() {
            assert_eq!(count, 120);
        }
        // Order: trial-major, then start time.
        assert_eq!(wd.windows[0].source_trial_id, 0);
        assert_eq!(wd.windows[2].source_trial_id, 0);
        assert_eq!(wd.windows[3].source_trial_id, 1);
    }

    #[test]
    fn empty_dataset_gives_empty_windows() {
        let ds = dataset_of_trials(4, 4.0, 100.0);
        let empty = EpochedDataset {
            montage: ds.montage.clone(),
            fs_hz: ds.fs_hz,
            epochs: vec![],
            epoch_len_s: ds.epoch_len_s,
        };
        let wd = augment_dataset(&empty, 2.0, 0.5).unwrap();
        assert!(wd.windows.is_empty());
    }

    proptest! {
        /// Window count always matches the closed-form formula.
        #[test]
        fn count_matches_formula(samples in 1usize..2000, win in 1usize..400, step in 1usize..200) {
            prop_assume!(win <= samples);
            let trial = Array2::<f32>::zeros((1, samples));
            // Express win/step in seconds at 1 Hz so any integer pair is valid.
            let overlap = 1.0 - step as f64 / win as f64;
            prop_assume!((0.0..1.0).contains(&overlap));
            let wins = sliding_windows(&trial, 1.0, win as f64, overlap);
            // Geometry can be rejected if rounding breaks integrality.
            if let Ok(wins) = wins {
                prop_assert_eq!(wins.len(), (samples - win) / step + 1);
            }
        }
    }
}
