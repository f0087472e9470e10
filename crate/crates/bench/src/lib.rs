//! Shared fixtures for the pipeline benchmarks.

use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vibci_core::data::{ClassLabel, Window, WindowedDataset};

/// Deterministic noise signal.
pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Random trial matrix, `channels x samples`.
pub fn trial(channels: usize, samples: usize, seed: u64) -> Array2<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((channels, samples), |_| rng.random_range(-1.0..1.0))
}

/// Random normalized batch, `batch x channels x samples`.
pub fn batch(n: usize, channels: usize, samples: usize, seed: u64) -> Array3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array3::from_shape_fn((n, channels, samples), |_| rng.random_range(-1.0..1.0))
}

/// Labeled random window set.
pub fn windows(count: usize, channels: usize, samples: usize, seed: u64) -> WindowedDataset {
    let windows = (0..count)
        .map(|i| Window {
            data: trial(channels, samples, seed.wrapping_add(i as u64)),
            label: ClassLabel::IMAGERY[i % 4],
            source_trial_id: i,
        })
        .collect();
    WindowedDataset { windows, win_len_s: 2.0, overlap_fraction: 0.5 }
}
