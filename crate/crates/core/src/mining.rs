//! Sample-level mining weights: focal re-weighting `(1 − p_y)^γ` and
//! hard-example keep/drop selection within a mini-batch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MiningSpec {
    #[default]
    None,
    Focal {
        gamma: f64,
    },
    /// Keeps the `⌈keep_ratio·B⌉` highest-loss samples of each batch.
    Hard {
        keep_ratio: f64,
    },
}

impl MiningSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MiningSpec::None => Ok(()),
            MiningSpec::Focal { gamma } if gamma.is_finite() && gamma >= 0.0 => Ok(()),
            MiningSpec::Focal { gamma } => Err(Error::InvalidConfig(format!("gamma must be finite and >= 0, got {gamma}"))),
            MiningSpec::Hard { keep_ratio } if keep_ratio > 0.0 && keep_ratio <= 1.0 => Ok(()),
            MiningSpec::Hard { keep_ratio } => Err(Error::InvalidConfig(format!("keep_ratio must be in (0, 1], got {keep_ratio}"))),
        }
    }
}

pub fn focal_weight(p_y: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_y) {
        return Err(Error::InvalidProbability(p_y));
    }
    Ok((1.0 - p_y).powf(gamma))
}

/// `d/dp (1 − p)^γ = −γ(1 − p)^(γ−1)`, taken as 0 once `1 − p < 1e-15`.
pub fn focal_weight_backward(p_y: f64, gamma: f64) -> f64 {
    let q = 1.0 - p_y;
    if gamma == 0.0 || q < 1e-15 {
        return 0.0;
    }
    -gamma * q.powf(gamma - 1.0)
}

/// Number of samples retained out of `batch_size`.
pub fn kept_count(batch_size: usize, keep_ratio: f64) -> usize {
    // absorb rounding in products like 0.1 * 30 before taking the ceiling
    let exact = keep_ratio * batch_size as f64;
    let n = (exact - 1e-9 * exact.max(1.0)).ceil() as usize;
    n.clamp(1, batch_size.max(1))
}

/// Marks the highest-loss samples as kept; ties favour the lower index.
pub fn hard_mining_mask(per_sample_losses: &[f64], keep_ratio: f64) -> Vec<bool> {
    let b = per_sample_losses.len();
    let n = kept_count(b, keep_ratio);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&i, &j| per_sample_losses[j].total_cmp(&per_sample_losses[i]));
    let mut mask = vec![false; b];
    for &i in &order[..n.min(b)] {
        mask[i] = true;
    }
    mask
}
