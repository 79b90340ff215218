//! Desk-scale training loop: shuffle, embed with a small backbone, evaluate
//! the configured loss, and update both the backbone and the class weights
//! with momentum SGD under a step-decay learning-rate schedule.

mod backbone;
mod data;
mod sgd;

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use backbone::{backbone_backward, backbone_forward, gaussian_matrix, Backbone, BackboneGrads, Linear, LinearGrads};
pub use data::{generate_synthetic, Dataset, SyntheticData, SyntheticDatasetSpec};
pub use sgd::sgd_step;

use crate::error::{Error, Result};
use crate::geometry::{ClassifierWeights, EmbeddingBatch};
use crate::mv_loss::{loss_backward, LossConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay_epochs: Vec<usize>,
    pub lr_decay_factor: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub hidden_dim: usize,
    pub embedding_dim: usize,
    /// Record elapsed milliseconds per epoch; when off the field is 0 so that
    /// logs are reproducible.
    pub record_wall_time: bool,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            batch_size: 128,
            lr: 0.1,
            lr_decay_epochs: vec![4, 8, 10],
            lr_decay_factor: 0.1,
            momentum: 0.9,
            weight_decay: 5e-4,
            seed: 0,
            hidden_dim: 64,
            embedding_dim: 32,
            record_wall_time: false,
            loss: LossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 {
            return fail("epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1".into());
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return fail(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if !self.lr_decay_epochs.windows(2).all(|w| w[0] < w[1]) {
            return fail("lr_decay_epochs must be strictly increasing".into());
        }
        if self.lr_decay_epochs.iter().any(|&e| e >= self.epochs) {
            return fail("lr_decay_epochs must be below the epoch count".into());
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor < 1.0) {
            return fail(format!("lr_decay_factor must be in (0, 1), got {}", self.lr_decay_factor));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.hidden_dim == 0 || self.embedding_dim < 2 {
            return fail("hidden_dim must be >= 1 and embedding_dim >= 2".into());
        }
        self.loss.validate()
    }

    /// Learning rate for a 1-based epoch: decayed once for every listed epoch
    /// that has been reached.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let steps = self.lr_decay_epochs.iter().filter(|&&e| e <= epoch).count();
        (0..steps).fold(self.lr, |lr, _| lr * self.lr_decay_factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Sample-weighted average of the per-batch mean losses.
    pub mean_loss: f64,
    pub median_misclass_count: f64,
    /// `misclass_histogram[c]` = samples with exactly `c` flagged classes.
    pub misclass_histogram: Vec<usize>,
    /// Samples whose target angle plus the additive angular margin exceeded π.
    pub margin_overflow: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub log: Vec<EpochRecord>,
    pub backbone: Backbone,
    pub classifier: ClassifierWeights,
}

impl TrainOutcome {
    pub fn embed(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        backbone_forward(&self.backbone, inputs)
    }
}

/// Momentum buffers for every trainable tensor.
struct Velocity {
    hidden_w: Vec<f64>,
    hidden_b: Vec<f64>,
    output_w: Vec<f64>,
    output_b: Vec<f64>,
    classifier: Vec<f64>,
}

impl Velocity {
    fn zeros(backbone: &Backbone, classifier: &Array2<f64>) -> Self {
        Self {
            hidden_w: vec![0.0; backbone.hidden.weight.len()],
            hidden_b: vec![0.0; backbone.hidden.bias.len()],
            output_w: vec![0.0; backbone.output.weight.len()],
            output_b: vec![0.0; backbone.output.bias.len()],
            classifier: vec![0.0; classifier.len()],
        }
    }
}

fn median(values: &mut [usize]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

fn slice_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

pub fn train(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut backbone = Backbone::init(dataset.input_dim(), config.hidden_dim, config.embedding_dim, &mut rng);
    let mut classifier = gaussian_matrix(dataset.num_classes, config.embedding_dim, &mut rng);
    let mut velocity = Velocity::zeros(&backbone, &classifier);
    let cfg = &config.loss;
    let (momentum, wd) = (config.momentum, config.weight_decay);

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let lr = config.lr_at_epoch(epoch);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut counts = Vec::with_capacity(dataset.len());
        let mut overflow = 0;
        for chunk in order.chunks(config.batch_size) {
            let (inputs, labels) = dataset.select(chunk);
            let embeddings = backbone_forward(&backbone, inputs.view())?;
            let batch = EmbeddingBatch::new(embeddings, labels)?;
            let weights = ClassifierWeights::new(classifier.clone())?;
            let out = loss_backward(&batch, &weights, cfg)?;

            loss_sum += out.mean_loss * chunk.len() as f64;
            counts.extend_from_slice(&out.misclass_counts);
            if cfg.margin.m3 > 0.0 {
                overflow += out
                    .target_cosines
                    .iter()
                    .filter(|c| c.acos() + cfg.margin.m3 > std::f64::consts::PI)
                    .count();
            }

            let grads = backbone_backward(&backbone, inputs.view(), out.grad_features.view())?;
            sgd_step(slice_mut(&mut classifier), slice(&out.grad_weights), &mut velocity.classifier, lr, momentum, wd);
            sgd_step(slice_mut(&mut backbone.hidden.weight), slice(&grads.hidden.weight), &mut velocity.hidden_w, lr, momentum, wd);
            sgd_step(backbone.hidden.bias.as_slice_mut().unwrap(), grads.hidden.bias.as_slice().unwrap(), &mut velocity.hidden_b, lr, momentum, wd);
            sgd_step(slice_mut(&mut backbone.output.weight), slice(&grads.output.weight), &mut velocity.output_w, lr, momentum, wd);
            sgd_step(backbone.output.bias.as_slice_mut().unwrap(), grads.output.bias.as_slice().unwrap(), &mut velocity.output_b, lr, momentum, wd);
        }

        let mut histogram = vec![0; dataset.num_classes];
        for &c in &counts {
            histogram[c] += 1;
        }
        log.push(EpochRecord {
            epoch,
            lr,
            mean_loss: loss_sum / dataset.len() as f64,
            median_misclass_count: median(&mut counts),
            misclass_histogram: histogram,
            margin_overflow: overflow,
            wall_ms: if config.record_wall_time { started.elapsed().as_millis() as u64 } else { 0 },
        });
    }

    Ok(TrainOutcome {
        log,
        backbone,
        classifier: ClassifierWeights::new(classifier)?,
    })
}
