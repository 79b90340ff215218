//! Unit normalization of features and class vectors, cosine logits, and the
//! backward pass through `x / ‖x‖`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Rows with a Euclidean norm below this value are rejected.
pub const NORM_EPS: f64 = 1e-12;

/// Raw (pre-normalization) features with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    features: Array2<f64>,
    labels: Vec<usize>,
}

impl EmbeddingBatch {
    pub fn new(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let (b, d) = features.dim();
        if b == 0 {
            return Err(Error::EmptyInput("embedding batch"));
        }
        if d < 2 {
            return Err(Error::DimensionMismatch(format!(
                "embedding dimension must be at least 2, got {d}"
            )));
        }
        if labels.len() != b {
            return Err(Error::DimensionMismatch(format!(
                "{b} feature rows but {} labels",
                labels.len()
            )));
        }
        ensure_finite(features.view(), "features")?;
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Checks every label against a class count.
    pub fn check_labels(&self, num_classes: usize) -> Result<()> {
        match self.labels.iter().find(|&&l| l >= num_classes) {
            Some(&label) => Err(Error::InvalidLabel { label, num_classes }),
            None => Ok(()),
        }
    }
}

/// Raw class vectors, one row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierWeights {
    weights: Array2<f64>,
}

impl ClassifierWeights {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        if weights.nrows() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 classes, got {}",
                weights.nrows()
            )));
        }
        ensure_finite(weights.view(), "class weights")?;
        for (row, w) in weights.axis_iter(Axis(0)).enumerate() {
            let norm = w.dot(&w).sqrt();
            if norm < NORM_EPS {
                return Err(Error::DegenerateNorm { row, norm });
            }
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.weights
    }
}

/// Clamped cosine similarities between every feature and every class vector.
///
/// The unit-normalized inputs are kept alongside so the backward pass does
/// not need to renormalize.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineLogits {
    pub cosines: Array2<f64>,
    pub row_feature_norms: Array1<f64>,
    pub col_weight_norms: Array1<f64>,
    pub unit_features: Array2<f64>,
    pub unit_weights: Array2<f64>,
}

fn ensure_finite(m: ArrayView2<'_, f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput(what))
    }
}

/// Scales every row to unit Euclidean norm, returning the original norms.
pub fn normalize_rows(m: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    ensure_finite(m, "matrix rows")?;
    let mut unit = m.to_owned();
    let mut norms = Array1::zeros(m.nrows());
    for (i, mut row) in unit.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm < NORM_EPS {
            return Err(Error::DegenerateNorm { row: i, norm });
        }
        row.mapv_inplace(|v| v / norm);
        norms[i] = norm;
    }
    Ok((unit, norms))
}

pub fn cosine_logits(batch: &EmbeddingBatch, w: &ClassifierWeights) -> Result<CosineLogits> {
    if batch.dim() != w.dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimension {} vs weight dimension {}",
            batch.dim(),
            w.dim()
        )));
    }
    let (unit_features, row_feature_norms) = normalize_rows(batch.features())?;
    let (unit_weights, col_weight_norms) = normalize_rows(w.weights())?;
    let mut cosines = unit_features.dot(&unit_weights.t());
    cosines.mapv_inplace(|c| c.clamp(-1.0, 1.0));
    Ok(CosineLogits {
        cosines,
        row_feature_norms,
        col_weight_norms,
        unit_features,
        unit_weights,
    })
}

/// Pulls a gradient w.r.t. `x / ‖x‖` back to `x`: `(I − x̂x̂ᵀ) g / ‖x‖`.
pub fn normalize_backward(raw_row: ArrayView1<'_, f64>, grad_wrt_unit: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if raw_row.len() != grad_wrt_unit.len() {
        return Err(Error::DimensionMismatch(format!(
            "row of length {} vs gradient of length {}",
            raw_row.len(),
            grad_wrt_unit.len()
        )));
    }
    let norm = raw_row.dot(&raw_row).sqrt();
    if norm < NORM_EPS {
        return Err(Error::DegenerateNorm { row: 0, norm });
    }
    let unit = raw_row.mapv(|v| v / norm);
    Ok(project_out(unit.view(), grad_wrt_unit, norm))
}

/// Same as [`normalize_backward`] with the unit vector and norm already known.
pub(crate) fn project_out(unit: ArrayView1<'_, f64>, grad: ArrayView1<'_, f64>, norm: f64) -> Array1<f64> {
    let radial = unit.dot(&grad);
    let mut out = grad.to_owned();
    out.scaled_add(-radial, &unit);
    out.mapv_inplace(|v| v / norm);
    out
}
