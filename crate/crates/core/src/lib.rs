//! # vibci-core
//!
//! A desk-scale laboratory for a four-class visual-imagery BCI pipeline,
//! end to end on synthetic EEG:
//!
//! ```text
//! synth::generate_subject      seeded class-conditional synthetic EEG
//!   |
//!   |- dsp::decimate           anti-aliased downsampling (default 1000 -> 100 Hz)
//!   |- dsp band-pass           zero-phase Hamming FIR, 0.5-13 Hz
//!   |- data::epoch             marker-aligned trials (imagery + rest)
//!   |   |
//!   |   |- stats               per-channel permutation test vs rest
//!   |   |- data::split_trials  stratified 80/20 trial split
//!   |       |- augment         2 s / 50 % sliding windows
//!   |           |- cnn         3-block convolutional decoder (from scratch)
//!   |               |- select  single-channel and channel-pair scans
//!   |               |- online  simulated closed-loop robotic-arm session
//! ```
//!
//! Everything is deterministic: each stage derives its seeds from one
//! master seed via [`seed::derive_seed`], so results are reproducible
//! across runs and across worker counts.

pub mod augment;
pub mod cnn;
pub mod data;
pub mod dsp;
pub mod error;
pub mod online;
pub mod seed;
pub mod select;
pub mod stats;
pub mod synth;

pub use data::{
    epoch, load_recording, save_recording, split_trials, ClassLabel, Epoch, EpochedDataset,
    Marker, Montage, Recording, Window, WindowedDataset,
};
pub use dsp::{Band, FirFilter};
pub use error::{Error, Result};
