//! One-vs-rest permutation test on per-channel band power.
//!
//! The statistic is a two-sample Welch t on log-transformed powers; the
//! p-value is the smoothed permutation rank
//! `(1 + #{|t*| >= |t_obs|}) / (n_perm + 1)`, so p is always positive.
//! Channels are independent and each derives its rng as
//! `seed + channel_index`, which makes results identical whether channels
//! run sequentially or in parallel.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-channel test outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelStat {
    pub channel: String,
    pub t_value: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Permutation test settings.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TestOptions {
    pub n_perm: usize,
    pub alpha: f64,
    /// Divide alpha by the channel count before thresholding.
    pub bonferroni: bool,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions { n_perm: 1000, alpha: 0.01, bonferroni: false, seed: 0 }
    }
}

/// Welch two-sample t statistic; `None` when the pooled variance is zero
/// (degenerate input).
fn welch_t(x: &[f64], y: &[f64]) -> Option<f64> {
    let n1 = x.len() as f64;
    let n2 = y.len() as f64;
    let m1 = x.iter().sum::<f64>() / n1;
    let m2 = y.iter().sum::<f64>() / n2;
    let v1 = x.iter().map(|v| (v - m1) * (v - m1)).sum::<f64>() / (n1 - 1.0);
    let v2 = y.iter().map(|v| (v - m2) * (v - m2)).sum::<f64>() / (n2 - 1.0);
    let denom = (v1 / n1 + v2 / n2).sqrt();
    if denom > 0.0 && denom.is_finite() {
        Some((m1 - m2) / denom)
    } else {
        None
    }
}

fn log_transform(powers: &[f64]) -> Vec<f64> {
    powers.iter().map(|&p| p.max(f64::MIN_POSITIVE).ln()).collect()
}

/// Test one channel. The pooled sample is sorted before permuting and the
/// smaller group is always drawn first, so p-values are exactly invariant
/// under swapping which condition is called "imagery".
fn test_channel(imagery: &[f64], rest: &[f64], n_perm: usize, seed: u64) -> (f64, f64) {
    let x = log_transform(imagery);
    let y = log_transform(rest);
    let Some(t_obs) = welch_t(&x, &y) else {
        return (0.0, 1.0); // no variance anywhere: no evidence
    };
    let mut pooled: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
    pooled.sort_by(|a, b| a.total_cmp(b));
    let n_small = x.len().min(y.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        pooled.shuffle(&mut rng);
        let (a, b) = pooled.split_at(n_small);
        let t_star = welch_t(a, b).map_or(0.0, f64::abs);
        if t_star >= t_obs.abs() {
            exceed += 1;
        }
    }
    let p = (1 + exceed) as f64 / (n_perm + 1) as f64;
    (t_obs, p)
}

/// Permutation test for every channel.
///
/// `imagery_powers` and `rest_powers` hold one list of per-epoch band
/// powers per channel, aligned with `channel_names`.
pub fn permutation_test(
    channel_names: &[String],
    imagery_powers: &[Vec<f64>],
    rest_powers: &[Vec<f64>],
    options: &TestOptions,
) -> Result<Vec<ChannelStat>> {
    let n_channels = channel_names.len();
    if imagery_powers.len() != n_channels || rest_powers.len() != n_channels {
        return Err(Error::ShapeMismatch(format!(
            "{} channels but {} imagery and {} rest power lists",
            n_channels,
            imagery_powers.len(),
            rest_powers.len()
        )));
    }
    if options.n_perm < 100 {
        return Err(Error::invalid("need at least 100 permutations"));
    }
    if !(options.alpha > 0.0 && options.alpha <= 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1]"));
    }
    for c in 0..n_channels {
        if imagery_powers[c].len() < 2 || rest_powers[c].len() < 2 {
            return Err(Error::invalid(format!(
                "channel {} needs at least 2 epochs per condition",
                channel_names[c]
            )));
        }
    }
    let effective_alpha = if options.bonferroni {
        options.alpha / n_channels as f64
    } else {
        options.alpha
    };

    let stats: Vec<ChannelStat> = (0..n_channels)
        .into_par_iter()
        .map(|c| {
            let (t, p) = test_channel(
                &imagery_powers[c],
                &rest_powers[c],
                options.n_perm,
                options.seed.wrapping_add(c as u64),
            );
            ChannelStat {
                channel: channel_names[c].clone(),
                t_value: t,
                p_value: p,
                significant: p <= effective_alpha,
            }
        })
        .collect();
    Ok(stats)
}

/// Channels with `p <= alpha`, ordered by ascending p, then descending
/// |t|, then input order.
pub fn significant_channels(stats: &[ChannelStat], alpha: f64) -> Vec<String> {
    let mut picked: Vec<(usize, &ChannelStat)> = stats
        .iter()
        .enumerate()
        .filter(|(_, s)| s.p_value <= alpha)
        .collect();
    picked.sort_by(|(ia, a), (ib, b)| {
        a.p_value
            .total_cmp(&b.p_value)
            .then(b.t_value.abs().total_cmp(&a.t_value.abs()))
            .then(ia.cmp(ib))
    });
    picked.into_iter().map(|(_, s)| s.channel.clone()).collect()
}
