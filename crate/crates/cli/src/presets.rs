//! Named loss configurations making up the comparison grid.

use mvsoftmax::{LossConfig, MarginSpec, MiningSpec, MvMode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Expands to every entry of [`PRESETS`].
pub const PAPER_DEFAULTS: &str = "paper-defaults";

/// Uses `train.loss` from the experiment file verbatim.
pub const CUSTOM: &str = "custom";

pub const PRESETS: [&str; 14] = [
    "softmax",
    "f-softmax",
    "hm-softmax",
    "a-softmax",
    "am-softmax",
    "arc-softmax",
    "f-am-softmax",
    "f-arc-softmax",
    "hm-am-softmax",
    "hm-arc-softmax",
    "mv-am-softmax-f",
    "mv-am-softmax-a",
    "mv-arc-softmax-f",
    "mv-arc-softmax-a",
];

/// Shared hyperparameters from which the presets are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub scale: f64,
    /// Angular margin of A-Softmax.
    pub m1: u32,
    /// Additive cosine margin of AM-Softmax.
    pub m2: f64,
    /// Additive angular margin of Arc-Softmax.
    pub m3: f64,
    pub gamma: f64,
    pub keep_ratio: f64,
    pub t_mv_am_fixed: f64,
    pub t_mv_am_adaptive: f64,
    pub t_mv_arc_fixed: f64,
    pub t_mv_arc_adaptive: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            scale: 32.0,
            m1: 3,
            m2: 0.35,
            m3: 0.5,
            gamma: 2.0,
            keep_ratio: 0.9,
            t_mv_am_fixed: 0.25,
            t_mv_am_adaptive: 0.2,
            t_mv_arc_fixed: 0.2,
            t_mv_arc_adaptive: 0.3,
        }
    }
}

pub(crate) fn known_names() -> String {
    let mut names: Vec<&str> = PRESETS.to_vec();
    names.extend([PAPER_DEFAULTS, CUSTOM]);
    names.join(", ")
}

pub fn preset(name: &str, h: &Hyperparameters) -> Option<LossConfig> {
    let base = LossConfig::softmax(h.scale);
    let am = MarginSpec::additive_cosine(h.m2);
    let arc = MarginSpec::additive_angle(h.m3);
    let focal = MiningSpec::Focal { gamma: h.gamma };
    let hard = MiningSpec::Hard { keep_ratio: h.keep_ratio };
    let config = match name {
        "softmax" => base,
        "f-softmax" => base.with_mining(focal),
        "hm-softmax" => base.with_mining(hard),
        "a-softmax" => base.with_margin(MarginSpec::angular(h.m1)),
        "am-softmax" => base.with_margin(am),
        "arc-softmax" => base.with_margin(arc),
        "f-am-softmax" => base.with_margin(am).with_mining(focal),
        "f-arc-softmax" => base.with_margin(arc).with_mining(focal),
        "hm-am-softmax" => base.with_margin(am).with_mining(hard),
        "hm-arc-softmax" => base.with_margin(arc).with_mining(hard),
        "mv-am-softmax-f" => base.with_margin(am).with_mv(MvMode::Fixed, h.t_mv_am_fixed),
        "mv-am-softmax-a" => base.with_margin(am).with_mv(MvMode::Adaptive, h.t_mv_am_adaptive),
        "mv-arc-softmax-f" => base.with_margin(arc).with_mv(MvMode::Fixed, h.t_mv_arc_fixed),
        "mv-arc-softmax-a" => base.with_margin(arc).with_mv(MvMode::Adaptive, h.t_mv_arc_adaptive),
        _ => return None,
    };
    Some(config)
}

/// Resolves a method list into `(name, loss)` pairs, expanding
/// `paper-defaults` in place.
pub fn resolve_methods(names: &[String], h: &Hyperparameters, custom: &LossConfig) -> Result<Vec<(String, LossConfig)>> {
    let mut out: Vec<(String, LossConfig)> = Vec::new();
    let mut push = |name: &str, loss: LossConfig| {
        if out.iter().any(|(n, _)| n == name) {
            return Err(CliError::DuplicateMethod(name.to_string()));
        }
        out.push((name.to_string(), loss));
        Ok(())
    };
    for name in names {
        match name.as_str() {
            PAPER_DEFAULTS => {
                for p in PRESETS {
                    push(p, preset(p, h).expect("listed preset"))?;
                }
            }
            CUSTOM => push(CUSTOM, *custom)?,
            other => push(other, preset(other, h).ok_or_else(|| CliError::UnknownMethod(other.to_string()))?)?,
        }
    }
    Ok(out)
}
