//! Seeded class-conditional synthetic EEG.
//!
//! Stands in for a recorded dataset. Per channel the background is
//! 1/f-shaped noise: white Gaussian samples passed through a one-pole
//! smoother `b[n] = a*b[n-1] + w[n]` with `a = exp(-2*pi*2.0/fs)` (2 Hz
//! corner), then scaled to unit RMS. During each imagery epoch a
//! class-specific alpha-band tone (occipital weighting) and delta-band tone
//! (prefrontal weighting) are added with 0.25 s cosine on/off ramps; rest
//! segments stay background-only. Amplitudes are `snr * class multiplier *
//! channel weight`, with snr expressed relative to the unit background RMS.
//!
//! Generation is a pure function of `(spec, seed)`. Every channel derives
//! its noise stream from its index in the full montage, so generating a
//! channel subset reproduces exactly the rows of the full recording.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, Marker, Montage, Recording};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// One imagery class's spectral signature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSignature {
    /// Alpha-band tone frequency, within [8, 13] Hz.
    pub alpha_hz: f64,
    /// Delta-band tone frequency, within [0.5, 4] Hz.
    pub delta_hz: f64,
    pub alpha_amplitude: f64,
    pub delta_amplitude: f64,
}

/// Full description of one synthetic subject.
///
/// Deserialization fills missing fields from [`SubjectSpec::default_subject`],
/// so a config file may override just a few knobs; consistency (for
/// example topography length vs montage) is checked by [`SubjectSpec::validate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SubjectSpec {
    pub montage: Montage,
    pub fs_hz: f64,
    pub trials_per_class: usize,
    pub epoch_len_s: f64,
    pub rest_len_s: f64,
    /// Class-signal amplitude over background RMS. Zero disables the task
    /// signal entirely.
    pub snr: f64,
    /// Per-channel alpha weights in [0, 1], aligned with the montage.
    pub alpha_gain_topography: Vec<f64>,
    /// Per-channel delta weights in [0, 1], aligned with the montage.
    pub delta_gain_topography: Vec<f64>,
    /// Exactly four entries, one per imagery label in canonical order.
    pub class_signatures: Vec<ClassSignature>,
}

/// Default occipital alpha weighting (peaks at Oz/O1/O2/Iz/POz).
const ALPHA_TOPOGRAPHY: &[(&str, f64)] = &[
    ("Oz", 1.0),
    ("O1", 0.9),
    ("O2", 0.9),
    ("Iz", 0.85),
    ("POz", 0.8),
    ("PO3", 0.45),
    ("PO4", 0.45),
    ("PO7", 0.4),
    ("PO8", 0.4),
    ("Pz", 0.15),
];

/// Default prefrontal delta weighting (peaks at Fp1/Fp2/AFz/AF3/AF4).
const DELTA_TOPOGRAPHY: &[(&str, f64)] = &[
    ("Fp1", 1.0),
    ("Fp2", 1.0),
    ("AFz", 0.9),
    ("AF3", 0.9),
    ("AF4", 0.9),
    ("AF7", 0.45),
    ("AF8", 0.45),
    ("Fz", 0.15),
];

/// Default class signatures: distinct alpha and delta tone frequencies per
/// imagery class so four-way decoding is possible from a single weighted
/// channel.
pub fn default_class_signatures() -> Vec<ClassSignature> {
    vec![
        ClassSignature { alpha_hz: 8.5, delta_hz: 1.0, alpha_amplitude: 1.0, delta_amplitude: 1.0 },
        ClassSignature { alpha_hz: 10.0, delta_hz: 1.8, alpha_amplitude: 1.0, delta_amplitude: 1.0 },
        ClassSignature { alpha_hz: 11.5, delta_hz: 2.6, alpha_amplitude: 1.0, delta_amplitude: 1.0 },
        ClassSignature { alpha_hz: 12.8, delta_hz: 3.4, alpha_amplitude: 1.0, delta_amplitude: 1.0 },
    ]
}

/// Weight vector for a montage from a `(label, weight)` table; unlisted
/// channels get zero.
pub fn topography_weights(montage: &Montage, table: &[(&str, f64)]) -> Vec<f64> {
    montage
        .names()
        .iter()
        .map(|name| {
            table
                .iter()
                .find(|(ch, _)| ch == name)
                .map_or(0.0, |&(_, w)| w)
        })
        .collect()
}

/// Default occipital alpha weights for a montage.
pub fn default_alpha_topography(montage: &Montage) -> Vec<f64> {
    topography_weights(montage, ALPHA_TOPOGRAPHY)
}

/// Default prefrontal delta weights for a montage.
pub fn default_delta_topography(montage: &Montage) -> Vec<f64> {
    topography_weights(montage, DELTA_TOPOGRAPHY)
}

impl Default for SubjectSpec {
    fn default() -> Self {
        SubjectSpec::default_subject()
    }
}

impl SubjectSpec {
    /// Default subject: full 64-channel montage at 1000 Hz, 50 trials per
    /// class, 4 s imagery epochs with 4 s rest before each, snr 2.
    pub fn default_subject() -> Self {
        let montage = Montage::standard_64();
        let alpha = default_alpha_topography(&montage);
        let delta = default_delta_topography(&montage);
        SubjectSpec {
            montage,
            fs_hz: 1000.0,
            trials_per_class: 50,
            epoch_len_s: 4.0,
            rest_len_s: 4.0,
            snr: 2.0,
            alpha_gain_topography: alpha,
            delta_gain_topography: delta,
            class_signatures: default_class_signatures(),
        }
    }

    pub fn n_trials(&self) -> usize {
        self.trials_per_class * ClassLabel::IMAGERY.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fs_hz.is_finite() || self.fs_hz <= 0.0 {
            return Err(Error::invalid("fs_hz must be positive"));
        }
        if self.trials_per_class < 1 {
            return Err(Error::invalid("trials_per_class must be >= 1"));
        }
        if !self.snr.is_finite() || self.snr < 0.0 {
            return Err(Error::invalid("snr must be nonnegative"));
        }
        if !(self.epoch_len_s > 0.0 && self.rest_len_s > 0.0) {
            return Err(Error::invalid("epoch and rest lengths must be positive"));
        }
        crate::data::seconds_to_samples(self.epoch_len_s, self.fs_hz, "epoch length")?;
        crate::data::seconds_to_samples(self.rest_len_s, self.fs_hz, "rest length")?;
        for (name, weights) in [
            ("alpha", &self.alpha_gain_topography),
            ("delta", &self.delta_gain_topography),
        ] {
            if weights.len() != self.montage.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{name} topography has {} weights for {} channels",
                    weights.len(),
                    self.montage.len()
                )));
            }
            if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::invalid(format!("{name} weights must lie in [0, 1]")));
            }
        }
        if self.class_signatures.len() != 4 {
            return Err(Error::invalid("exactly 4 class signatures required"));
        }
        for sig in &self.class_signatures {
            if !(8.0..=13.0).contains(&sig.alpha_hz) {
                return Err(Error::invalid(format!("alpha_hz {} outside [8, 13]", sig.alpha_hz)));
            }
            if !(0.5..=4.0).contains(&sig.delta_hz) {
                return Err(Error::invalid(format!("delta_hz {} outside [0.5, 4]", sig.delta_hz)));
            }
        }
        Ok(())
    }
}

/// Gaussian sampler (Box-Muller).
struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    fn new(seed: u64) -> Self {
        Gaussian { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1: f64 = self.rng.random_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = self.rng.random_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Unit-RMS 1/f-shaped background noise of length `n`.
fn background_noise(seed: u64, n: usize, fs_hz: f64) -> Vec<f64> {
    let mut gauss = Gaussian::new(seed);
    let a = (-2.0 * std::f64::consts::PI * 2.0 / fs_hz).exp();
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for _ in 0..n {
        prev = a * prev + gauss.next();
        out.push(prev);
    }
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        for v in &mut out {
            *v /= rms;
        }
    }
    out
}

/// Cosine on/off ramp envelope over an epoch of `n` samples.
fn burst_envelope(t: usize, n: usize, ramp_samples: usize) -> f64 {
    let ramp = ramp_samples.min(n / 2).max(1);
    if t < ramp {
        let x = t as f64 / ramp as f64;
        0.5 * (1.0 - (std::f64::consts::PI * x).cos())
    } else if t >= n - ramp {
        let x = (n - 1 - t) as f64 / ramp as f64;
        0.5 * (1.0 - (std::f64::consts::PI * x).cos())
    } else {
        1.0
    }
}

/// Balanced, seed-shuffled label order for a subject's imagery trials.
fn trial_labels(spec: &SubjectSpec, seed: u64) -> Vec<ClassLabel> {
    let mut labels: Vec<ClassLabel> = ClassLabel::IMAGERY
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, spec.trials_per_class))
        .collect();
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "labels", 0));
    labels.shuffle(&mut rng);
    labels
}

/// Phases drawn once per trial (shared across channels).
fn trial_phases(seed: u64, trial: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "trial-phase", trial));
    let tau = 2.0 * std::f64::consts::PI;
    (rng.random_range(0.0..tau), rng.random_range(0.0..tau))
}

/// Generate a subject recording restricted to `channel_indices` (indices
/// into the spec montage). Rows equal the corresponding rows of the full
/// recording exactly.
pub fn generate_channels(
    spec: &SubjectSpec,
    seed: u64,
    channel_indices: &[usize],
) -> Result<Recording> {
    spec.validate()?;
    let fs = spec.fs_hz;
    let epoch_n = crate::data::seconds_to_samples(spec.epoch_len_s, fs, "epoch length")?;
    let rest_n = crate::data::seconds_to_samples(spec.rest_len_s, fs, "rest length")?;
    let block = rest_n + epoch_n;
    let n_trials = spec.n_trials();
    let total = n_trials * block;
    let ramp = (0.25 * fs).round() as usize;

    let labels = trial_labels(spec, seed);
    let phases: Vec<(f64, f64)> = (0..n_trials).map(|i| trial_phases(seed, i as u64)).collect();

    let montage = spec.montage.select(channel_indices)?;
    let mut samples = Array2::<f32>::zeros((channel_indices.len(), total));

    for (row, &ch) in channel_indices.iter().enumerate() {
        let mut signal = background_noise(derive_seed(seed, "background", ch as u64), total, fs);
        let alpha_w = spec.alpha_gain_topography[ch];
        let delta_w = spec.delta_gain_topography[ch];
        if spec.snr > 0.0 && (alpha_w > 0.0 || delta_w > 0.0) {
            for (i, &label) in labels.iter().enumerate() {
                let sig = &spec.class_signatures[label.imagery_index().expect("imagery label")];
                let (phase_a, phase_d) = phases[i];
                let amp_a = spec.snr * sig.alpha_amplitude * alpha_w;
                let amp_d = spec.snr * sig.delta_amplitude * delta_w;
                let start = i * block + rest_n;
                for t in 0..epoch_n {
                    let env = burst_envelope(t, epoch_n, ramp);
                    let time = t as f64 / fs;
                    let tau = 2.0 * std::f64::consts::PI;
                    signal[start + t] += env
                        * (amp_a * (tau * sig.alpha_hz * time + phase_a).sin()
                            + amp_d * (tau * sig.delta_hz * time + phase_d).sin());
                }
            }
        }
        for (t, &v) in signal.iter().enumerate() {
            samples[[row, t]] = v as f32;
        }
    }

    let mut markers = Vec::with_capacity(2 * n_trials);
    for (i, &label) in labels.iter().enumerate() {
        markers.push(Marker { onset: i * block, label: ClassLabel::Rest });
        markers.push(Marker { onset: i * block + rest_n, label });
    }

    Recording::new(montage, fs, samples, markers)
}

/// Generate the full subject recording: markers for every rest and imagery
/// stage, deterministic per `(spec, seed)`.
pub fn generate_subject(spec: &SubjectSpec, seed: u64) -> Result<Recording> {
    let all: Vec<usize> = (0..spec.montage.len()).collect();
    generate_channels(spec, seed, &all)
}

/// Generate one fresh imagery trial of `label` with `pad_s` of background
/// context on both sides, restricted to `channel_indices`. Used by the
/// online session source; the seed stream is independent of the offline
/// subject generation.
pub fn generate_trial_segment(
    spec: &SubjectSpec,
    seed: u64,
    trial_index: u64,
    label: ClassLabel,
    pad_s: f64,
    channel_indices: &[usize],
) -> Result<Array2<f32>> {
    spec.validate()?;
    let k = label
        .imagery_index()
        .ok_or_else(|| Error::invalid("online trials must use imagery labels"))?;
    let fs = spec.fs_hz;
    let epoch_n = crate::data::seconds_to_samples(spec.epoch_len_s, fs, "epoch length")?;
    let pad_n = crate::data::seconds_to_samples(pad_s, fs, "pad length")?;
    let total = epoch_n + 2 * pad_n;
    let ramp = (0.25 * fs).round() as usize;
    let sig = &spec.class_signatures[k];
    let n_channels_total = spec.montage.len() as u64;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "online-phase", trial_index));
    let tau = 2.0 * std::f64::consts::PI;
    let phase_a = rng.random_range(0.0..tau);
    let phase_d = rng.random_range(0.0..tau);

    let mut out = Array2::<f32>::zeros((channel_indices.len(), total));
    for (row, &ch) in channel_indices.iter().enumerate() {
        let bg_seed = derive_seed(
            seed,
            "online-background",
            trial_index * n_channels_total + ch as u64,
        );
        let mut signal = background_noise(bg_seed, total, fs);
        let amp_a = spec.snr * sig.alpha_amplitude * spec.alpha_gain_topography[ch];
        let amp_d = spec.snr * sig.delta_amplitude * spec.delta_gain_topography[ch];
        if spec.snr > 0.0 && (amp_a > 0.0 || amp_d > 0.0) {
            for t in 0..epoch_n {
                let env = burst_envelope(t, epoch_n, ramp);
                let time = t as f64 / fs;
                signal[pad_n + t] += env
                    * (amp_a * (tau * sig.alpha_hz * time + phase_a).sin()
                        + amp_d * (tau * sig.delta_hz * time + phase_d).sin());
            }
        }
        for (t, &v) in signal.iter().enumerate() {
            out[[row, t]] = v as f32;
        }
    }
    Ok(out)
}
