//! Compact 3-block convolutional decoder, written from scratch: forward
//! pass, reverse-mode gradients, Adam, training loop, and evaluation.
//!
//! Input windows are standardized per window and channel (zero mean, unit
//! variance with a 1e-8 variance floor) before entering the network. Each
//! block is a valid 1-D cross-correlation along time, bias, rectified
//! linear activation, and non-overlapping average pooling; a global average
//! over time and an affine map produce 4 logits, softmaxed to class
//! probabilities.

mod ops;
mod train;

pub use ops::{forward, loss_and_grad, normalize_window, windows_to_batch};
pub use train::{adam_step, evaluate, train, train_with_arch, trial_vote, AdamState, Metrics};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One convolution block: kernel length, output feature count, and the
/// non-overlapping average-pool length that follows it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kernel_len: usize,
    pub out_features: usize,
    pub pool_len: usize,
}

/// Network architecture: exactly three convolution blocks over a
/// `input_channels x input_samples` window, then a global-average-pool and
/// an affine map to 4 logits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_channels: usize,
    pub input_samples: usize,
    pub blocks: Vec<BlockSpec>,
}

/// Default block stack: receptive field spans roughly a second at 100 Hz
/// while staying small enough for CPU training.
pub fn default_blocks() -> Vec<BlockSpec> {
    vec![
        BlockSpec { kernel_len: 25, out_features: 8, pool_len: 4 },
        BlockSpec { kernel_len: 11, out_features: 16, pool_len: 4 },
        BlockSpec { kernel_len: 7, out_features: 32, pool_len: 2 },
    ]
}

pub const N_CLASSES: usize = 4;

impl Architecture {
    pub fn new(input_channels: usize, input_samples: usize, blocks: Vec<BlockSpec>) -> Result<Self> {
        let arch = Architecture { input_channels, input_samples, blocks };
        arch.validate()?;
        Ok(arch)
    }

    /// Default three-block architecture for a given window shape.
    pub fn with_default_blocks(input_channels: usize, input_samples: usize) -> Result<Self> {
        Architecture::new(input_channels, input_samples, default_blocks())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.input_samples == 0 {
            return Err(Error::invalid("architecture input shape must be nonzero"));
        }
        if self.blocks.len() != 3 {
            return Err(Error::invalid(format!(
                "architecture needs exactly 3 blocks, got {}",
                self.blocks.len()
            )));
        }
        let mut t = self.input_samples;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.kernel_len % 2 == 0 {
                return Err(Error::invalid(format!(
                    "block {i} kernel length {} must be odd",
                    b.kernel_len
                )));
            }
            if b.out_features == 0 || b.pool_len == 0 {
                return Err(Error::invalid(format!("block {i} has a zero dimension")));
            }
            if t < b.kernel_len {
                return Err(Error::invalid(format!(
                    "block {i} kernel {} longer than its {t}-sample input",
                    b.kernel_len
                )));
            }
            let conv_out = t - b.kernel_len + 1;
            t = conv_out / b.pool_len;
            if t == 0 {
                return Err(Error::invalid(format!(
                    "block {i} pooling of {} empties the time axis",
                    b.pool_len
                )));
            }
        }
        Ok(())
    }

    /// Per-block time-axis lengths: (conv output, pool output) per block.
    pub(crate) fn time_trace(&self) -> Vec<(usize, usize)> {
        let mut t = self.input_samples;
        self.blocks
            .iter()
            .map(|b| {
                let conv = t - b.kernel_len + 1;
                let pool = conv / b.pool_len;
                t = pool;
                (conv, pool)
            })
            .collect()
    }

    /// Feature count entering the affine head.
    pub fn head_features(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.out_features)
    }
}

/// One convolution layer's parameters. Weights are indexed
/// `[out][in][tap]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub in_features: usize,
    pub out_features: usize,
    pub kernel_len: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    #[inline]
    pub(crate) fn weight_index(&self, o: usize, i: usize, k: usize) -> usize {
        (o * self.in_features + i) * self.kernel_len + k
    }
}

/// Affine head parameters. Weights are indexed `[class][feature]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Decoder parameters plus the architecture they instantiate.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub arch: Architecture,
    pub blocks: Vec<ConvLayer>,
    pub head: Dense,
}

impl Model {
    /// Parameter tensors in canonical order: each block's weights then
    /// bias, then head weights and bias. Gradients, Adam moments, and the
    /// serialized payload all follow this order.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.blocks.len() + 2);
        for b in &self.blocks {
            out.push(b.weights.as_slice());
            out.push(b.bias.as_slice());
        }
        out.push(self.head.weights.as_slice());
        out.push(self.head.bias.as_slice());
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.blocks.len() + 2);
        for b in &mut self.blocks {
            out.push(b.weights.as_mut_slice());
            out.push(b.bias.as_mut_slice());
        }
        out.push(self.head.weights.as_mut_slice());
        out.push(self.head.bias.as_mut_slice());
        out
    }

    pub fn n_parameters(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Gradient (or moment) storage aligned with [`Model::param_slices`].
#[derive(Clone, Debug)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Gradients {
            tensors: model.param_slices().iter().map(|s| vec![0.0; s.len()]).collect(),
        }
    }
}

/// Training hyperparameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 16,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be positive"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::invalid("adam betas must lie in (0, 1)"));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::invalid("adam eps must be positive"));
        }
        Ok(())
    }
}

/// Initialize a model: kernels uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`,
/// biases zero, deterministic per seed.
pub fn init_model(arch: &Architecture, seed: u64) -> Result<Model> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(arch.blocks.len());
    let mut in_features = arch.input_channels;
    for spec in &arch.blocks {
        let fan_in = in_features * spec.kernel_len;
        let scale = 1.0 / (fan_in as f64).sqrt();
        let n_w = spec.out_features * in_features * spec.kernel_len;
        let weights = (0..n_w).map(|_| rng.random_range(-scale..scale)).collect();
        blocks.push(ConvLayer {
            in_features,
            out_features: spec.out_features,
            kernel_len: spec.kernel_len,
            weights,
            bias: vec![0.0; spec.out_features],
        });
        in_features = spec.out_features;
    }
    let fan_in = in_features;
    let scale = 1.0 / (fan_in as f64).sqrt();
    let head = Dense {
        in_features,
        out_features: N_CLASSES,
        weights: (0..N_CLASSES * in_features)
            .map(|_| rng.random_range(-scale..scale))
            .collect(),
        bias: vec![0.0; N_CLASSES],
    };
    Ok(Model { arch: arch.clone(), blocks, head })
}

const MODEL_META_FILE: &str = "model.json";
const MODEL_PARAMS_FILE: &str = "params.f64le";
const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    format_version: u32,
    architecture: Architecture,
    n_parameters: usize,
}

/// Save a model as `model.json` plus a little-endian binary64 parameter
/// payload in canonical parameter order. Round-trips bit-exactly.
pub fn save_model(model: &Model, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = ModelMeta {
        format_version: MODEL_FORMAT_VERSION,
        architecture: model.arch.clone(),
        n_parameters: model.n_parameters(),
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    fs::write(dir.join(MODEL_META_FILE), json)?;
    let mut out = BufWriter::new(fs::File::create(dir.join(MODEL_PARAMS_FILE))?);
    for slice in model.param_slices() {
        for &v in slice {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Load a model saved by [`save_model`].
pub fn load_model(dir: &Path) -> Result<Model> {
    let meta: ModelMeta =
        serde_json::from_str(&fs::read_to_string(dir.join(MODEL_META_FILE))?)?;
    if meta.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: meta.format_version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let mut model = init_model(&meta.architecture, 0)?;
    if model.n_parameters() != meta.n_parameters {
        return Err(Error::Format(format!(
            "metadata declares {} parameters, architecture implies {}",
            meta.n_parameters,
            model.n_parameters()
        )));
    }
    let mut raw = Vec::new();
    fs::File::open(dir.join(MODEL_PARAMS_FILE))?.read_to_end(&mut raw)?;
    if raw.len() != meta.n_parameters * 8 {
        return Err(Error::Format(format!(
            "parameter payload is {} bytes, expected {}",
            raw.len(),
            meta.n_parameters * 8
        )));
    }
    let mut chunks = raw.chunks_exact(8);
    for slice in model.param_slices_mut() {
        for v in slice {
            let b = chunks.next().expect("length checked");
            *v = f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_arch() -> Architecture {
        Architecture::new(
            2,
            32,
            vec![
                BlockSpec { kernel_len: 5, out_features: 3, pool_len: 2 },
                BlockSpec { kernel_len: 3, out_features: 4, pool_len: 2 },
                BlockSpec { kernel_len: 3, out_features: 5, pool_len: 2 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn architecture_must_have_three_blocks() {
        let mut blocks = default_blocks();
        blocks.pop();
        assert!(Architecture::new(1, 200, blocks).is_err());
    }

    #[test]
    fn even_kernel_rejected() {
        let mut blocks = default_blocks();
        blocks[0].kernel_len = 24;
        assert!(Architecture::new(1, 200, blocks).is_err());
    }

    #[test]
    fn over_pooling_rejected() {
        let mut blocks = default_blocks();
        blocks[2].pool_len = 50;
        assert!(Architecture::new(1, 200, blocks).is_err());
    }

    #[test]
    fn default_blocks_fit_a_two_second_window_at_100hz() {
        let arch = Architecture::with_default_blocks(1, 200).unwrap();
        let trace = arch.time_trace();
        assert_eq!(trace, vec![(176, 44), (34, 8), (2, 1)]);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases_and_bounded_kernels() {
        let arch = tiny_arch();
        let a = init_model(&arch, 7).unwrap();
        let b = init_model(&arch, 7).unwrap();
        assert_eq!(a, b);
        for layer in &a.blocks {
            assert!(layer.bias.iter().all(|&v| v == 0.0));
            let scale = 1.0 / ((layer.in_features * layer.kernel_len) as f64).sqrt();
            assert!(layer.weights.iter().all(|v| v.abs() <= scale));
        }
        assert!(a.head.bias.iter().all(|&v| v == 0.0));
        let c = init_model(&arch, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn model_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let model = init_model(&tiny_arch(), 3).unwrap();
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        assert_eq!(loaded.arch, model.arch);
        for (a, b) in loaded
            .param_slices()
            .iter()
            .flat_map(|s| s.iter())
            .zip(model.param_slices().iter().flat_map(|s| s.iter()))
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
