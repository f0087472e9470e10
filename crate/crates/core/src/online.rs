//! Simulated online session: streamed trials, windowed decoding, a logged
//! robotic-arm state machine, and success-rate accounting.

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::sliding_windows;
use crate::cnn::{forward, normalize_window, trial_vote, Model, N_CLASSES};
use crate::data::{ClassLabel, Montage, Recording};
use crate::dsp::{decimate, design_bandpass_fir, filter_recording, Band};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::synth::{generate_trial_segment, SubjectSpec};

/// Online protocol: balanced cued trials, decoded per trial by majority
/// vote over sliding windows.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SessionProtocol {
    pub trials_per_class: usize,
    /// Sessions per invocation at the pipeline level.
    pub runs: usize,
}

impl Default for SessionProtocol {
    fn default() -> Self {
        SessionProtocol { trials_per_class: 10, runs: 3 }
    }
}

impl SessionProtocol {
    pub fn total_trials(&self) -> usize {
        self.trials_per_class * ClassLabel::IMAGERY.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_class == 0 || self.runs == 0 {
            return Err(Error::invalid("protocol needs at least one trial and one run"));
        }
        Ok(())
    }
}

/// Exact success ratio. Display rounding happens only at report emission.
pub fn success_rate(correct: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::invalid("success rate undefined for zero trials"));
    }
    if correct > total {
        return Err(Error::invalid(format!("{correct} correct out of {total}")));
    }
    Ok(correct as f64 / total as f64)
}

/// Render `correct/total` like `0.73 (29/40)`: two decimals, half-up
/// rounding of the exact ratio (computed in integers so 29/40 shows 0.73).
pub fn format_success_rate(correct: usize, total: usize) -> String {
    let hundredths = (200 * correct as u64 + total as u64) / (2 * total as u64);
    format!("{}.{:02} ({correct}/{total})", hundredths / 100, hundredths % 100)
}

/// The four arm commands, one per imagery class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArmAction {
    PourWater,
    OpenDoor,
    EatFood,
    PickUpPhone,
}

impl TryFrom<ClassLabel> for ArmAction {
    type Error = Error;

    fn try_from(label: ClassLabel) -> Result<ArmAction> {
        match label {
            ClassLabel::PourWater => Ok(ArmAction::PourWater),
            ClassLabel::OpenDoor => Ok(ArmAction::OpenDoor),
            ClassLabel::EatFood => Ok(ArmAction::EatFood),
            ClassLabel::PickUpPhone => Ok(ArmAction::PickUpPhone),
            ClassLabel::Rest => Err(Error::invalid("rest is not an arm action")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArmState {
    #[default]
    Idle,
    Executing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmTransition {
    pub trial: usize,
    pub action: ArmAction,
    pub from: ArmState,
    pub to: ArmState,
}

/// Logged stand-in for the physical arm: Idle before and after every
/// trial, exactly one action per decoded trial.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ArmTrace {
    pub transitions: Vec<ArmTransition>,
    pub state: ArmState,
}

impl ArmTrace {
    pub fn new() -> Self {
        ArmTrace { transitions: Vec::new(), state: ArmState::Idle }
    }

    /// Execute one action: appends Idle -> Executing -> Idle transitions
    /// tagged with the trial index. Errors if the arm is already moving.
    pub fn execute(&mut self, trial: usize, action: ArmAction) -> Result<()> {
        if self.state != ArmState::Idle {
            return Err(Error::invalid("arm commanded while executing"));
        }
        self.state = ArmState::Executing;
        self.transitions.push(ArmTransition {
            trial,
            action,
            from: ArmState::Idle,
            to: ArmState::Executing,
        });
        self.transitions.push(ArmTransition {
            trial,
            action,
            from: ArmState::Executing,
            to: ArmState::Idle,
        });
        self.state = ArmState::Idle;
        Ok(())
    }
}

/// Execute `action` against `trace`, returning the updated trace.
pub fn arm_execute(mut trace: ArmTrace, trial: usize, action: ArmAction) -> Result<ArmTrace> {
    trace.execute(trial, action)?;
    Ok(trace)
}

/// One decoded trial: the winning label plus the per-window decisions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodedTrial {
    pub label: ClassLabel,
    pub window_votes: Vec<ClassLabel>,
}

/// Per-trial session log entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialResult {
    pub true_label: ClassLabel,
    pub decoded: ClassLabel,
    pub window_votes: Vec<ClassLabel>,
}

/// Session outcome: per-trial log and the exact success ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub trials: Vec<TrialResult>,
    pub correct: usize,
    pub total: usize,
    pub success_rate: f64,
}

impl RunReport {
    pub fn display_rate(&self) -> String {
        format_success_rate(self.correct, self.total)
    }
}

/// Source of cued raw trials (channels x samples at `fs_hz`).
pub trait TrialSource {
    fn next_trial(&mut self, trial_index: usize, label: ClassLabel) -> Result<Array2<f32>>;
    fn fs_hz(&self) -> f64;
}

/// Turns a raw cued trial into a class decision.
pub trait TrialDecoder {
    fn decode_trial(&self, raw: &Array2<f32>, fs_hz: f64) -> Result<DecodedTrial>;
}

/// Preprocessing applied to each online trial; mirrors the offline
/// training settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OnlinePreprocess {
    pub decimation: usize,
    pub band: Band,
    pub filter_order: usize,
    /// Background context on each side of the raw trial, trimmed after
    /// filtering.
    pub pad_s: f64,
    /// Central segment that is windowed and decoded.
    pub epoch_len_s: f64,
}

/// CNN-backed decoder: decimate, zero-phase band-pass, cut the cued epoch,
/// window it, and majority-vote the window predictions.
pub struct CnnTrialDecoder {
    pub model: Model,
    pub montage: Montage,
    pub preprocess: OnlinePreprocess,
    pub win_len_s: f64,
    pub overlap: f64,
}

impl TrialDecoder for CnnTrialDecoder {
    fn decode_trial(&self, raw: &Array2<f32>, fs_hz: f64) -> Result<DecodedTrial> {
        if raw.nrows() != self.model.arch.input_channels {
            return Err(Error::ShapeMismatch(format!(
                "trial has {} channels, model expects {}",
                raw.nrows(),
                self.model.arch.input_channels
            )));
        }
        let rec = Recording::new(self.montage.clone(), fs_hz, raw.clone(), vec![])?;
        let rec = decimate(&rec, self.preprocess.decimation)?;
        let fir = design_bandpass_fir(self.preprocess.band, rec.fs_hz, self.preprocess.filter_order)?;
        let rec = filter_recording(&rec, &fir)?;

        let pad_n = crate::data::seconds_to_samples(self.preprocess.pad_s, rec.fs_hz, "pad")?;
        let epoch_n =
            crate::data::seconds_to_samples(self.preprocess.epoch_len_s, rec.fs_hz, "epoch")?;
        if pad_n + epoch_n > rec.n_samples() {
            return Err(Error::OutOfRange("online trial shorter than pad + epoch".into()));
        }
        let cued = rec.samples.slice(s![.., pad_n..pad_n + epoch_n]).to_owned();

        let windows = sliding_windows(&cued, rec.fs_hz, self.win_len_s, self.overlap)?;
        let mut preds = Vec::with_capacity(windows.len());
        let mut votes = Vec::with_capacity(windows.len());
        for window in &windows {
            let normalized = normalize_window(window);
            let (c, t) = normalized.dim();
            let mut batch = ndarray::Array3::zeros((1, c, t));
            for ch in 0..c {
                for i in 0..t {
                    batch[[0, ch, i]] = normalized[[ch, i]];
                }
            }
            let probs = forward(&self.model, &batch)?;
            let mut row = [0.0; N_CLASSES];
            for (cls, v) in row.iter_mut().enumerate() {
                *v = probs[[0, cls]];
            }
            let pred = (0..N_CLASSES)
                .max_by(|&i, &j| row[i].total_cmp(&row[j]))
                .expect("nonempty");
            preds.push((pred, row));
            votes.push(ClassLabel::IMAGERY[pred]);
        }
        let winner = trial_vote(&preds);
        Ok(DecodedTrial { label: ClassLabel::IMAGERY[winner], window_votes: votes })
    }
}

/// Synthetic trial source: every cue yields a freshly generated imagery
/// trial (never seen in training) with background context padding.
pub struct SynthTrialSource {
    pub spec: SubjectSpec,
    pub channel_indices: Vec<usize>,
    pub session_seed: u64,
    pub pad_s: f64,
}

impl TrialSource for SynthTrialSource {
    fn next_trial(&mut self, trial_index: usize, label: ClassLabel) -> Result<Array2<f32>> {
        generate_trial_segment(
            &self.spec,
            self.session_seed,
            trial_index as u64,
            label,
            self.pad_s,
            &self.channel_indices,
        )
    }

    fn fs_hz(&self) -> f64 {
        self.spec.fs_hz
    }
}

/// Run one session: a seeded balanced cue order, one decode and one arm
/// action per trial, and an exact success tally.
pub fn run_online_session(
    source: &mut dyn TrialSource,
    decoder: &dyn TrialDecoder,
    protocol: &SessionProtocol,
    seed: u64,
) -> Result<(RunReport, ArmTrace)> {
    protocol.validate()?;
    let mut labels: Vec<ClassLabel> = ClassLabel::IMAGERY
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, protocol.trials_per_class))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "session-labels", 0));
    labels.shuffle(&mut rng);

    let fs = source.fs_hz();
    let mut trials = Vec::with_capacity(labels.len());
    let mut arm = ArmTrace::new();
    let mut correct = 0;
    for (i, &label) in labels.iter().enumerate() {
        let raw = source.next_trial(i, label)?;
        let decoded = decoder.decode_trial(&raw, fs)?;
        arm.execute(i, ArmAction::try_from(decoded.label)?)?;
        if decoded.label == label {
            correct += 1;
        }
        trials.push(TrialResult {
            true_label: label,
            decoded: decoded.label,
            window_votes: decoded.window_votes,
        });
    }
    let total = trials.len();
    let report = RunReport { trials, correct, total, success_rate: success_rate(correct, total)? };
    Ok((report, arm))
}
