//! The loss engine. Every family (plain normalized softmax, margin softmax,
//! focal/hard-mined variants, their fusions, and mis-classified vector
//! re-weighting) is a softmax cross-entropy over *modified logits*:
//!
//! * target class: `f(cos θ_y)` from [`crate::margins`];
//! * non-target class `k` flagged as mis-classified (`f(cos θ_y) < cos θ_k`):
//!   `cos θ_k + t` (fixed) or `(t + 1)·cos θ_k + t` (adaptive);
//! * every other class: `cos θ_k`.
//!
//! Multiplying by the scale `s` and applying a max-shifted log-sum-exp gives
//! the loss. The re-weighting factors `e^{s·t}` and `e^{s·t·(cos θ_k + 1)}`
//! are realized only through these shifts and never formed explicitly.
//!
//! Gradients treat the indicator flags and the hard-mining mask as constants.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cosine_logits, project_out, ClassifierWeights, EmbeddingBatch};
use crate::margins::{margin_backward, margin_value, MarginSpec};
use crate::mining::{focal_weight, focal_weight_backward, hard_mining_mask, MiningSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MvMode {
    #[default]
    Off,
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub scale: f64,
    #[serde(default)]
    pub margin: MarginSpec,
    #[serde(default)]
    pub mining: MiningSpec,
    #[serde(default)]
    pub mv_mode: MvMode,
    #[serde(default)]
    pub t: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self::softmax(32.0)
    }
}

impl LossConfig {
    pub fn softmax(scale: f64) -> Self {
        Self {
            scale,
            margin: MarginSpec::PLAIN,
            mining: MiningSpec::None,
            mv_mode: MvMode::Off,
            t: 0.0,
        }
    }

    pub fn with_margin(mut self, margin: MarginSpec) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_mining(mut self, mining: MiningSpec) -> Self {
        self.mining = mining;
        self
    }

    pub fn with_mv(mut self, mode: MvMode, t: f64) -> Self {
        self.mv_mode = mode;
        self.t = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidConfig(format!("scale must be finite and > 0, got {}", self.scale)));
        }
        self.margin.validate()?;
        self.mining.validate()?;
        if self.mv_mode != MvMode::Off && !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::InvalidConfig(format!("t must be finite and >= 0, got {}", self.t)));
        }
        Ok(())
    }
}

/// Flags non-target classes whose cosine beats the target's margin value.
/// Equality is not a mis-classification.
pub fn indicator(cosines_row: &[f64], label: usize, margin: &MarginSpec) -> Result<Vec<bool>> {
    let k = cosines_row.len();
    if label >= k {
        return Err(Error::InvalidLabel { label, num_classes: k });
    }
    let target = margin_value(cosines_row[label], margin);
    Ok(cosines_row
        .iter()
        .enumerate()
        .map(|(j, &c)| j != label && target - c < 0.0)
        .collect())
}

/// Multiplier on a non-target exponential `e^{s·cos θ_k}`.
pub fn reweight_h(cos_theta_k: f64, indicator: bool, s: f64, t: f64, mode: MvMode) -> f64 {
    if !indicator {
        return 1.0;
    }
    match mode {
        MvMode::Off => 1.0,
        MvMode::Fixed => (s * t).exp(),
        MvMode::Adaptive => (s * t * (cos_theta_k + 1.0)).exp(),
    }
}

fn shifted_logit(c: f64, flagged: bool, mode: MvMode, t: f64) -> f64 {
    match (flagged, mode) {
        (true, MvMode::Fixed) => c + t,
        (true, MvMode::Adaptive) => (t + 1.0) * c + t,
        _ => c,
    }
}

fn shifted_slope(flagged: bool, mode: MvMode, t: f64) -> f64 {
    match (flagged, mode) {
        (true, MvMode::Adaptive) => t + 1.0,
        _ => 1.0,
    }
}

/// Logits (before multiplying by the scale) that feed the softmax.
pub fn modified_logits(cosines_row: &[f64], label: usize, config: &LossConfig) -> Result<Vec<f64>> {
    let flags = indicator(cosines_row, label, &config.margin)?;
    Ok(modified_logits_with(cosines_row, label, &flags, config))
}

fn modified_logits_with(row: &[f64], label: usize, flags: &[bool], config: &LossConfig) -> Vec<f64> {
    row.iter()
        .enumerate()
        .map(|(k, &c)| {
            if k == label {
                margin_value(c, &config.margin)
            } else {
                shifted_logit(c, flags[k], config.mv_mode, config.t)
            }
        })
        .collect()
}

/// Indicator flags and hard-mining mask frozen at some evaluation point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossPins {
    pub flags: Array2<bool>,
    pub kept: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossForward {
    pub per_sample_loss: Array1<f64>,
    pub mean_loss: f64,
    pub misclass_counts: Vec<usize>,
    pub p_y: Array1<f64>,
    pub flags: Array2<bool>,
    /// All true unless hard mining dropped samples.
    pub kept: Vec<bool>,
}

impl LossForward {
    pub fn pins(&self) -> LossPins {
        LossPins {
            flags: self.flags.clone(),
            kept: self.kept.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub per_sample_loss: Array1<f64>,
    pub mean_loss: f64,
    /// Gradient of `mean_loss` w.r.t. the raw features.
    pub grad_features: Array2<f64>,
    /// Gradient of `mean_loss` w.r.t. the raw class weights.
    pub grad_weights: Array2<f64>,
    pub misclass_counts: Vec<usize>,
    pub p_y: Array1<f64>,
    pub kept: Vec<bool>,
    /// Clamped target-class cosines `cos θ_y`.
    pub target_cosines: Array1<f64>,
}

struct SampleTerms {
    cross_entropy: f64,
    probs: Vec<f64>,
}

/// Stable softmax cross-entropy of scaled logits against `label`.
fn softmax_terms(logits: &[f64], scale: f64, label: usize) -> SampleTerms {
    let z: Vec<f64> = logits.iter().map(|v| scale * v).collect();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
    let lse = max + sum.ln();
    SampleTerms {
        cross_entropy: lse - z[label],
        probs: z.iter().map(|v| (v - lse).exp()).collect(),
    }
}

/// Gradient of `g(p_y)·CE` (or plain CE) w.r.t. the scaled logits.
fn logit_gradient(terms: &SampleTerms, label: usize, mining: &MiningSpec) -> Vec<f64> {
    let ce_grad = terms
        .probs
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == label { p - 1.0 } else { p });
    match *mining {
        MiningSpec::Focal { gamma } => {
            let p_y = terms.probs[label].min(1.0);
            let g = (1.0 - p_y).powf(gamma);
            let dg = focal_weight_backward(p_y, gamma);
            // dp_y/dz_k = p_y·(δ_ky − p_k) = −p_y·(CE gradient)
            ce_grad
                .map(|d| g * d - dg * p_y * d * terms.cross_entropy)
                .collect()
        }
        _ => ce_grad.collect(),
    }
}

fn check_shapes(batch: &EmbeddingBatch, w: &ClassifierWeights, config: &LossConfig) -> Result<()> {
    config.validate()?;
    if batch.dim() != w.dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimension {} vs weight dimension {}",
            batch.dim(),
            w.dim()
        )));
    }
    batch.check_labels(w.num_classes())
}

fn check_pins(pins: &LossPins, b: usize, k: usize) -> Result<()> {
    if pins.flags.dim() != (b, k) || pins.kept.len() != b {
        return Err(Error::DimensionMismatch(format!(
            "pins of shape {:?}/{} for a {b}x{k} problem",
            pins.flags.dim(),
            pins.kept.len()
        )));
    }
    Ok(())
}

struct Evaluation {
    forward: LossForward,
    /// d mean_loss / d cosine, B×K.
    cosine_grad: Option<Array2<f64>>,
}

fn evaluate(
    cosines: &Array2<f64>,
    labels: &[usize],
    config: &LossConfig,
    pins: Option<&LossPins>,
    want_grad: bool,
) -> Result<Evaluation> {
    let (b, k) = cosines.dim();
    let mut flags = Array2::from_elem((b, k), false);
    let mut raw_losses = Array1::zeros(b);
    let mut p_y = Array1::zeros(b);
    let mut misclass_counts = Vec::with_capacity(b);
    let mut logit_grads = Vec::with_capacity(if want_grad { b } else { 0 });

    for (i, row) in cosines.axis_iter(Axis(0)).enumerate() {
        let row = row.to_vec();
        let label = labels[i];
        let sample_flags = match pins {
            Some(p) => p.flags.row(i).to_vec(),
            None => indicator(&row, label, &config.margin)?,
        };
        misclass_counts.push(sample_flags.iter().filter(|&&f| f).count());
        let logits = modified_logits_with(&row, label, &sample_flags, config);
        let terms = softmax_terms(&logits, config.scale, label);
        let py = terms.probs[label];
        let loss = match config.mining {
            MiningSpec::Focal { gamma } => focal_weight(py.min(1.0), gamma)? * terms.cross_entropy,
            _ => terms.cross_entropy,
        };
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(i));
        }
        raw_losses[i] = loss;
        p_y[i] = py;
        flags.row_mut(i).iter_mut().zip(&sample_flags).for_each(|(dst, &f)| *dst = f);
        if want_grad {
            let dz = logit_gradient(&terms, label, &config.mining);
            let grad_row: Vec<f64> = dz
                .iter()
                .enumerate()
                .map(|(j, d)| {
                    let slope = if j == label {
                        margin_backward(row[j], &config.margin)
                    } else {
                        shifted_slope(sample_flags[j], config.mv_mode, config.t)
                    };
                    config.scale * d * slope
                })
                .collect();
            logit_grads.push(grad_row);
        }
    }

    let kept = match (pins, config.mining) {
        (Some(p), MiningSpec::Hard { .. }) => p.kept.clone(),
        (None, MiningSpec::Hard { keep_ratio }) => hard_mining_mask(raw_losses.as_slice().unwrap(), keep_ratio),
        _ => vec![true; b],
    };
    let kept_n = kept.iter().filter(|&&x| x).count();
    let per_sample_loss = Array1::from_shape_fn(b, |i| if kept[i] { raw_losses[i] } else { 0.0 });
    let mean_loss = if kept_n == 0 {
        0.0
    } else {
        per_sample_loss.iter().sum::<f64>() / kept_n as f64
    };

    let cosine_grad = want_grad.then(|| {
        let mut g = Array2::zeros((b, k));
        for (i, row) in logit_grads.iter().enumerate() {
            if !kept[i] {
                continue;
            }
            for (j, v) in row.iter().enumerate() {
                g[[i, j]] = v / kept_n as f64;
            }
        }
        g
    });

    Ok(Evaluation {
        forward: LossForward {
            per_sample_loss,
            mean_loss,
            misclass_counts,
            p_y,
            flags,
            kept,
        },
        cosine_grad,
    })
}

pub fn loss_forward(batch: &EmbeddingBatch, w: &ClassifierWeights, config: &LossConfig) -> Result<LossForward> {
    check_shapes(batch, w, config)?;
    let logits = cosine_logits(batch, w)?;
    Ok(evaluate(&logits.cosines, batch.labels(), config, None, false)?.forward)
}

/// Forward pass with indicator flags and hard-mining mask held fixed.
pub fn loss_forward_pinned(
    batch: &EmbeddingBatch,
    w: &ClassifierWeights,
    config: &LossConfig,
    pins: &LossPins,
) -> Result<LossForward> {
    check_shapes(batch, w, config)?;
    check_pins(pins, batch.len(), w.num_classes())?;
    let logits = cosine_logits(batch, w)?;
    Ok(evaluate(&logits.cosines, batch.labels(), config, Some(pins), false)?.forward)
}

pub fn loss_backward(batch: &EmbeddingBatch, w: &ClassifierWeights, config: &LossConfig) -> Result<LossOutput> {
    check_shapes(batch, w, config)?;
    backward_impl(batch, w, config, None)
}

pub fn loss_backward_pinned(
    batch: &EmbeddingBatch,
    w: &ClassifierWeights,
    config: &LossConfig,
    pins: &LossPins,
) -> Result<LossOutput> {
    check_shapes(batch, w, config)?;
    check_pins(pins, batch.len(), w.num_classes())?;
    backward_impl(batch, w, config, Some(pins))
}

fn backward_impl(
    batch: &EmbeddingBatch,
    w: &ClassifierWeights,
    config: &LossConfig,
    pins: Option<&LossPins>,
) -> Result<LossOutput> {
    let logits = cosine_logits(batch, w)?;
    let eval = evaluate(&logits.cosines, batch.labels(), config, pins, true)?;
    let cos_grad = eval.cosine_grad.expect("gradient requested");

    // cos_ik = <x̂_i, ŵ_k>
    let grad_unit_x = cos_grad.dot(&logits.unit_weights);
    let grad_unit_w = cos_grad.t().dot(&logits.unit_features);

    let grad_features = pull_back(&grad_unit_x, &logits.unit_features, logits.row_feature_norms.view());
    let grad_weights = pull_back(&grad_unit_w, &logits.unit_weights, logits.col_weight_norms.view());

    let f = eval.forward;
    let labels = batch.labels();
    let target_cosines = Array1::from_shape_fn(labels.len(), |i| logits.cosines[[i, labels[i]]]);
    Ok(LossOutput {
        per_sample_loss: f.per_sample_loss,
        mean_loss: f.mean_loss,
        grad_features,
        grad_weights,
        misclass_counts: f.misclass_counts,
        p_y: f.p_y,
        kept: f.kept,
        target_cosines,
    })
}

fn pull_back(grad_unit: &Array2<f64>, unit: &Array2<f64>, norms: ArrayView1<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros(grad_unit.dim());
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        row.assign(&project_out(unit.row(i), grad_unit.row(i), norms[i]));
    }
    out
}
