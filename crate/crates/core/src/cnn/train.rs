//! Adam optimizer, training loop, and evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::ops::{loss_and_grad, windows_to_batch};
use super::{forward, init_model, Architecture, Gradients, Model, TrainConfig, N_CLASSES};
use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Adam moment estimates, aligned with [`Model::param_slices`].
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &Model) -> Self {
        let zeros = Gradients::zeros_like(model).tensors;
        AdamState { m: zeros.clone(), v: zeros, step: 0 }
    }
}

/// One Adam update with bias correction. Deterministic; two identical calls
/// from identical state produce identical results.
pub fn adam_step(model: &mut Model, grads: &Gradients, state: &mut AdamState, config: &TrainConfig) {
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - config.beta1.powi(t);
    let bias2 = 1.0 - config.beta2.powi(t);
    for ((params, grad), (m, v)) in model
        .param_slices_mut()
        .into_iter()
        .zip(&grads.tensors)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for j in 0..params.len() {
            let g = grad[j];
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            params[j] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
        }
    }
}

/// Train with the default three-block architecture sized to the windows.
pub fn train(windows: &WindowedDataset, config: &TrainConfig) -> Result<(Model, Vec<f64>)> {
    let arch = Architecture::with_default_blocks(windows.n_channels(), windows.win_samples())?;
    train_with_arch(windows, &arch, config)
}

/// Train a fresh model on every window of `windows`.
///
/// Windows are reshuffled each epoch from the config's seed stream and
/// consumed in mini-batches of `batch_size` (the final short batch is
/// kept). Returns the final-epoch model and the mean batch loss per epoch.
/// Fully deterministic for a given `(data, config)`.
pub fn train_with_arch(
    windows: &WindowedDataset,
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<(Model, Vec<f64>)> {
    config.validate()?;
    if windows.windows.is_empty() {
        return Err(Error::invalid("cannot train on an empty window set"));
    }
    let mut model = init_model(arch, derive_seed(config.seed, "model-init", 0))?;
    let mut state = AdamState::new(&model);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "train-shuffle", 0));
    let mut order: Vec<usize> = (0..windows.windows.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for _epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0;
        for chunk in order.chunks(config.batch_size) {
            let refs: Vec<&crate::data::Window> =
                chunk.iter().map(|&i| &windows.windows[i]).collect();
            let (batch, labels) = windows_to_batch(&refs)?;
            let (loss, grads) = loss_and_grad(&model, &batch, &labels)?;
            adam_step(&mut model, &grads, &mut state, config);
            epoch_loss += loss;
            n_batches += 1;
        }
        loss_history.push(epoch_loss / n_batches as f64);
    }
    Ok((model, loss_history))
}

/// Evaluation results at window and trial granularity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metrics {
    pub window_accuracy: f64,
    pub trial_accuracy: f64,
    /// Window-level accuracy per imagery class (0 when a class is absent).
    pub per_class_accuracy: [f64; N_CLASSES],
    /// Window-level confusion matrix, rows = true class.
    pub confusion: [[usize; N_CLASSES]; N_CLASSES],
    /// Mean batch loss per training epoch; empty when the metrics come
    /// from evaluation alone.
    pub loss_history: Vec<f64>,
}

/// Majority vote over one trial's window predictions; ties go to the tied
/// class with the highest mean probability.
pub fn trial_vote(window_preds: &[(usize, [f64; N_CLASSES])]) -> usize {
    let mut votes = [0usize; N_CLASSES];
    let mut prob_sums = [0.0; N_CLASSES];
    for (pred, probs) in window_preds {
        votes[*pred] += 1;
        for c in 0..N_CLASSES {
            prob_sums[c] += probs[c];
        }
    }
    let top = *votes.iter().max().expect("nonempty");
    (0..N_CLASSES)
        .filter(|&c| votes[c] == top)
        .max_by(|&a, &b| prob_sums[a].total_cmp(&prob_sums[b]))
        .expect("nonempty")
}

/// Classify every window, then score windows directly and trials by
/// majority vote over their windows.
pub fn evaluate(model: &Model, windows: &WindowedDataset) -> Result<Metrics> {
    if windows.windows.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty window set"));
    }
    let mut confusion = [[0usize; N_CLASSES]; N_CLASSES];
    // trial id -> (true label, per-window (prediction, probabilities))
    type TrialVotes = (usize, Vec<(usize, [f64; N_CLASSES])>);
    let mut per_trial: BTreeMap<usize, TrialVotes> = BTreeMap::new();

    const EVAL_BATCH: usize = 64;
    for chunk in windows.windows.chunks(EVAL_BATCH) {
        let refs: Vec<&crate::data::Window> = chunk.iter().collect();
        let (batch, labels) = windows_to_batch(&refs)?;
        let probs = forward(model, &batch)?;
        for (b, window) in chunk.iter().enumerate() {
            let mut row = [0.0; N_CLASSES];
            for c in 0..N_CLASSES {
                row[c] = probs[[b, c]];
            }
            let pred = (0..N_CLASSES)
                .max_by(|&i, &j| row[i].total_cmp(&row[j]))
                .expect("nonempty");
            confusion[labels[b]][pred] += 1;
            per_trial
                .entry(window.source_trial_id)
                .or_insert_with(|| (labels[b], Vec::new()))
                .1
                .push((pred, row));
        }
    }

    let total: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..N_CLASSES).map(|c| confusion[c][c]).sum();
    let window_accuracy = correct as f64 / total as f64;
    let per_class_accuracy = std::array::from_fn(|c| {
        let row_total: usize = confusion[c].iter().sum();
        if row_total == 0 {
            0.0
        } else {
            confusion[c][c] as f64 / row_total as f64
        }
    });

    let mut trial_correct = 0;
    for (true_label, preds) in per_trial.values() {
        if trial_vote(preds) == *true_label {
            trial_correct += 1;
        }
    }
    let trial_accuracy = trial_correct as f64 / per_trial.len() as f64;

    Ok(Metrics {
        window_accuracy,
        trial_accuracy,
        per_class_accuracy,
        confusion,
        loss_history: Vec::new(),
    })
}
