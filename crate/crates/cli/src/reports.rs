//! JSON report schemas emitted by the commands. Field order is fixed by
//! the struct definitions, so serialized reports are byte-stable.

use serde::{Deserialize, Serialize};

use vibci_core::data::ClassLabel;
use vibci_core::dsp::Band;
use vibci_core::online::{ArmTrace, TrialResult};
use vibci_core::select::{ChannelReport, PairReport};
use vibci_core::stats::ChannelStat;

use crate::config::SelectionMode;

#[derive(Serialize, Deserialize)]
pub struct ClassStats {
    pub class: ClassLabel,
    pub channels: Vec<ChannelStat>,
}

/// Permutation-test report for one subject.
#[derive(Serialize, Deserialize)]
pub struct StatsReport {
    pub kind: String,
    pub subject: String,
    pub band: Band,
    pub alpha: f64,
    pub n_perm: usize,
    pub bonferroni: bool,
    pub selection_mode: SelectionMode,
    /// One block per imagery class (class vs rest).
    pub per_class: Vec<ClassStats>,
    /// All imagery epochs pooled vs rest.
    pub overall: Vec<ChannelStat>,
    /// Combined shortlist over the per-class significant sets, montage
    /// order.
    pub selected: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct ChannelScanReport {
    pub kind: String,
    #[serde(flatten)]
    pub report: ChannelReport,
}

#[derive(Serialize, Deserialize)]
pub struct PairScanReport {
    pub kind: String,
    #[serde(flatten)]
    pub report: PairReport,
}

#[derive(Serialize, Deserialize)]
pub struct OnlineRun {
    pub run: usize,
    pub correct: usize,
    pub total: usize,
    pub success_rate: f64,
    /// Two-decimal half-up rendering, e.g. `0.73 (29/40)`.
    pub display: String,
    pub trials: Vec<TrialResult>,
    pub arm_trace: ArmTrace,
}

#[derive(Serialize, Deserialize)]
pub struct OnlineSimReport {
    pub kind: String,
    pub channels: Vec<String>,
    pub snr: f64,
    pub runs: Vec<OnlineRun>,
}

pub const KIND_STATS: &str = "stats";
pub const KIND_CHANNEL_SCAN: &str = "channel_scan";
pub const KIND_PAIR_SCAN: &str = "pair_scan";
pub const KIND_ONLINE_SIM: &str = "online_sim";
