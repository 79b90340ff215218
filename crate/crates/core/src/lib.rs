//! Normalized-softmax classification losses for embedding learning.
//!
//! The crate covers the plain cosine softmax, margin-based variants
//! (angular, additive-cosine and additive-angle margins), sample mining
//! (focal re-weighting, hard-example selection), their naive fusions, and
//! mis-classified vector guided re-weighting with fixed or adaptive weights.
//! All losses come with exact gradients w.r.t. the raw (unnormalized)
//! features and class weights. A small trainer and verification metrics
//! make it possible to compare the families on synthetic data.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod margins;
pub mod mining;
pub mod mv_loss;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod trainer;

pub use error::{Error, Result};
pub use geometry::{cosine_logits, normalize_backward, normalize_rows, ClassifierWeights, CosineLogits, EmbeddingBatch};
pub use margins::{margin_backward, margin_forward, MarginSpec};
pub use mining::{focal_weight, focal_weight_backward, hard_mining_mask, MiningSpec};
pub use mv_loss::{
    indicator, loss_backward, loss_backward_pinned, loss_forward, loss_forward_pinned, modified_logits, reweight_h,
    LossConfig, LossForward, LossOutput, LossPins, MvMode,
};
