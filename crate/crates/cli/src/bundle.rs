//! Trained-model bundle: the serialized network plus the preprocessing
//! settings the online session must replay.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use anyhow::Context;
use vibci_core::cnn::{load_model, save_model, Model};
use vibci_core::dsp::Band;

use crate::config::TrainParams;

const SETTINGS_FILE: &str = "settings.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelBundle {
    pub kind: String,
    pub channels: Vec<String>,
    pub source_fs_hz: f64,
    pub decimation: usize,
    pub band: Band,
    pub filter_order: usize,
    pub epoch_len_s: f64,
    pub win_len_s: f64,
    pub overlap: f64,
    pub online_pad_s: f64,
    pub train: TrainParams,
    pub master_seed: u64,
}

pub fn save_bundle(dir: &Path, model: &Model, bundle: &ModelBundle) -> anyhow::Result<()> {
    save_model(model, dir)?;
    let mut json = serde_json::to_string_pretty(bundle)?;
    json.push('\n');
    fs::write(dir.join(SETTINGS_FILE), json)?;
    Ok(())
}

pub fn load_bundle(dir: &Path) -> anyhow::Result<(Model, ModelBundle)> {
    let model = load_model(dir).with_context(|| format!("loading model from {}", dir.display()))?;
    let bundle: ModelBundle =
        serde_json::from_str(&fs::read_to_string(dir.join(SETTINGS_FILE))?)
            .with_context(|| format!("loading settings from {}", dir.display()))?;
    Ok((model, bundle))
}
