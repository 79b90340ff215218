//! Slow reference implementations used by the test suites. Nothing here
//! shares a code path with the production routines it checks.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::geometry::{ClassifierWeights, EmbeddingBatch};
use crate::mining::MiningSpec;
use crate::mv_loss::{loss_backward_pinned, loss_forward, loss_forward_pinned, LossConfig, MvMode};

/// Cosine between two slices by explicit loops.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Brute-force cosine matrix.
pub fn cosine_matrix(x: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((x.nrows(), w.nrows()), |(i, k)| {
        cosine(x.row(i).as_slice().unwrap(), w.row(k).as_slice().unwrap()).clamp(-1.0, 1.0)
    })
}

/// Target margin through the trigonometric form.
pub fn margin_trig(c: f64, m1: u32, m2: f64, m3: f64) -> f64 {
    (f64::from(m1) * c.acos() + m3).cos() - m2
}

/// Per-sample loss as the literal quotient
/// `−g(p)·log(e^{s·f} / (e^{s·f} + Σ_{k≠y} h_k·e^{s·cos θ_k}))` with the
/// re-weighting factors `h_k` formed explicitly. Hard mining is not applied
/// (it is a batch-level decision).
pub fn literal_loss(cos_row: &[f64], label: usize, config: &LossConfig) -> f64 {
    let s = config.scale;
    let m = config.margin;
    let f = margin_trig(cos_row[label], m.m1, m.m2, m.m3);
    let numerator = (s * f).exp();
    let mut denominator = numerator;
    for (k, &c) in cos_row.iter().enumerate() {
        if k == label {
            continue;
        }
        let flagged = f - c < 0.0;
        let h = match (flagged, config.mv_mode) {
            (true, MvMode::Fixed) => (s * config.t).exp(),
            (true, MvMode::Adaptive) => (s * config.t * (c + 1.0)).exp(),
            _ => 1.0,
        };
        denominator += h * (s * c).exp();
    }
    let p = numerator / denominator;
    let g = match config.mining {
        MiningSpec::Focal { gamma } => (1.0 - p).powf(gamma),
        _ => 1.0,
    };
    -g * p.ln()
}

/// Plain normalized softmax cross-entropy, written out directly.
pub fn plain_softmax_loss(cos_row: &[f64], label: usize, s: f64) -> f64 {
    let denominator: f64 = cos_row.iter().map(|c| (s * c).exp()).sum();
    -((s * cos_row[label]).exp() / denominator).ln()
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, b: usize, k: usize, d: usize) -> (EmbeddingBatch, ClassifierWeights) {
    let labels = (0..b).map(|_| rng.random_range(0..k)).collect();
    let batch = EmbeddingBatch::new(random_matrix(rng, b, d), labels).unwrap();
    let w = ClassifierWeights::new(random_matrix(rng, k, d)).unwrap();
    (batch, w)
}

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub coordinates: usize,
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central differences of the mean loss over every raw feature and weight
/// coordinate, with indicator flags and the hard-mining mask pinned at the
/// unperturbed point.
pub fn finite_difference_check(
    batch: &EmbeddingBatch,
    w: &ClassifierWeights,
    config: &LossConfig,
    step: f64,
    floor: f64,
) -> GradCheck {
    let base = loss_forward(batch, w, config).unwrap();
    let pins = base.pins();
    let analytic = loss_backward_pinned(batch, w, config, &pins).unwrap();
    let eval = |x: &Array2<f64>, wm: &Array2<f64>| {
        let b = EmbeddingBatch::new(x.clone(), batch.labels().to_vec()).unwrap();
        let cw = ClassifierWeights::new(wm.clone()).unwrap();
        loss_forward_pinned(&b, &cw, config, &pins).unwrap().mean_loss
    };
    let x0 = batch.features().to_owned();
    let w0 = w.weights().to_owned();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        coordinates: 0,
    };
    let mut record = |a: f64, n: f64| {
        out.max_rel_error = out.max_rel_error.max(relative_error(a, n, floor));
        out.max_abs_error = out.max_abs_error.max((a - n).abs());
        out.coordinates += 1;
    };
    for idx in 0..x0.len() {
        let (mut p, mut m) = (x0.clone(), x0.clone());
        p.as_slice_mut().unwrap()[idx] += step;
        m.as_slice_mut().unwrap()[idx] -= step;
        let numeric = (eval(&p, &w0) - eval(&m, &w0)) / (2.0 * step);
        record(analytic.grad_features.as_slice().unwrap()[idx], numeric);
    }
    for idx in 0..w0.len() {
        let (mut p, mut m) = (w0.clone(), w0.clone());
        p.as_slice_mut().unwrap()[idx] += step;
        m.as_slice_mut().unwrap()[idx] -= step;
        let numeric = (eval(&x0, &p) - eval(&x0, &m)) / (2.0 * step);
        record(analytic.grad_weights.as_slice().unwrap()[idx], numeric);
    }
    out
}

/// TPR at one FAR level by trying every observed score as a threshold.
pub fn brute_tpr_at_far(scores: &[f64], same: &[bool], far: f64) -> f64 {
    let negatives = same.iter().filter(|&&s| !s).count();
    let positives = same.len() - negatives;
    let mut best: Option<f64> = None;
    for &thr in scores {
        let false_accepts = scores.iter().zip(same).filter(|&(&s, &p)| !p && s >= thr).count();
        if false_accepts as f64 / negatives as f64 <= far && best.is_none_or(|b| thr < b) {
            best = Some(thr);
        }
    }
    match best {
        None => 0.0,
        Some(thr) => {
            let hits = scores.iter().zip(same).filter(|&(&s, &p)| p && s >= thr).count();
            hits as f64 / positives as f64
        }
    }
}

/// Rank-1 identification by exhaustive nearest-neighbour search.
pub fn brute_cmc_rank1(
    probes: ArrayView2<'_, f64>,
    probe_labels: &[usize],
    gallery: ArrayView2<'_, f64>,
    gallery_labels: &[usize],
) -> f64 {
    let mut hits = 0;
    for (i, &label) in probe_labels.iter().enumerate() {
        let p = probes.row(i).to_vec();
        let mut best_j = 0;
        let mut best = f64::NEG_INFINITY;
        for j in 0..gallery.nrows() {
            let s = cosine(&p, &gallery.row(j).to_vec());
            if s > best {
                best = s;
                best_j = j;
            }
        }
        if gallery_labels[best_j] == label {
            hits += 1;
        }
    }
    hits as f64 / probe_labels.len() as f64
}
