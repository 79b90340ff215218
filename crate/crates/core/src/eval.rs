//! Verification and identification metrics over cosine similarities.
//!
//! Thresholds are exact order statistics of the observed scores; a pair is
//! accepted when its score is `>=` the threshold.

use ndarray::{Array1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::geometry::normalize_rows;

#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pairs: Vec<(Array1<f64>, Array1<f64>, bool)>,
}

impl PairSet {
    pub fn new(pairs: Vec<(Array1<f64>, Array1<f64>, bool)>) -> Result<Self> {
        let Some(first) = pairs.first() else {
            return Err(Error::EmptyInput("pair set"));
        };
        let d = first.0.len();
        for (a, b, _) in &pairs {
            if a.len() != d || b.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "pair embeddings of length {} and {}, expected {d}",
                    a.len(),
                    b.len()
                )));
            }
            if !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
                return Err(Error::NonFiniteInput("pair embeddings"));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(Array1<f64>, Array1<f64>, bool)] {
        &self.pairs
    }

    pub fn labels(&self) -> Vec<bool> {
        self.pairs.iter().map(|p| p.2).collect()
    }
}

fn unit(v: &Array1<f64>) -> Result<Array1<f64>> {
    let (u, _) = normalize_rows(v.view().insert_axis(Axis(0)))?;
    Ok(u.row(0).to_owned())
}

pub fn verification_scores(pairs: &PairSet) -> Result<Vec<f64>> {
    pairs
        .pairs
        .iter()
        .map(|(a, b, _)| Ok(unit(a)?.dot(&unit(b)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub far: f64,
    pub tpr: f64,
    pub threshold: f64,
}

fn check_scores(scores: &[f64], same: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != same.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores but {} labels",
            scores.len(),
            same.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteInput("scores"));
    }
    let positives = same.iter().filter(|&&s| s).count();
    let negatives = same.len() - positives;
    if positives == 0 {
        return Err(Error::NoPositivePairs);
    }
    if negatives == 0 {
        return Err(Error::InsufficientNegatives { negatives: 0, far: 1.0 });
    }
    Ok((positives, negatives))
}

/// Distinct scores in descending order with the cumulative counts of
/// positives and negatives scoring at or above each.
fn cumulative_counts(scores: &[f64], same: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    let (mut pos, mut neg) = (0, 0);
    for (n, &i) in order.iter().enumerate() {
        if same[i] {
            pos += 1;
        } else {
            neg += 1;
        }
        let last_of_group = order.get(n + 1).is_none_or(|&j| scores[j] != scores[i]);
        if last_of_group {
            out.push((scores[i], pos, neg));
        }
    }
    out
}

/// ROC over every distinct threshold, starting at `(0, 0)` with an infinite
/// threshold and ending at `(1, 1)`.
pub fn roc_curve(scores: &[f64], same: &[bool]) -> Result<Vec<RocPoint>> {
    let (p, n) = check_scores(scores, same)?;
    let mut roc = vec![RocPoint {
        far: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    roc.extend(cumulative_counts(scores, same).into_iter().map(|(s, pos, neg)| RocPoint {
        far: neg as f64 / n as f64,
        tpr: pos as f64 / p as f64,
        threshold: s,
    }));
    Ok(roc)
}

/// TPR at each requested FAR, in the order given.
///
/// The threshold is the smallest observed score whose false-accept fraction
/// is at most the FAR level; if none qualifies, nothing is accepted.
pub fn tpr_at_far(scores: &[f64], same: &[bool], far_levels: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (p, n) = check_scores(scores, same)?;
    if far_levels.is_empty() {
        return Err(Error::EmptyInput("FAR levels"));
    }
    for &far in far_levels {
        if !(far > 0.0 && far <= 1.0) {
            return Err(Error::InvalidConfig(format!("FAR level {far} outside (0, 1]")));
        }
        if (n as f64) * far < 1.0 - 1e-12 {
            return Err(Error::InsufficientNegatives { negatives: n, far });
        }
    }
    let cumulative = cumulative_counts(scores, same);
    Ok(far_levels
        .iter()
        .map(|&far| {
            let accepted = cumulative
                .iter()
                .take_while(|&&(_, _, neg)| neg as f64 / n as f64 <= far)
                .last()
                .map_or(0, |&(_, pos, _)| pos);
            (far, accepted as f64 / p as f64)
        })
        .collect())
}

/// Best accuracy over all thresholds (including rejecting everything).
pub fn pair_accuracy(scores: &[f64], same: &[bool]) -> Result<f64> {
    let (p, n) = check_scores(scores, same)?;
    let total = (p + n) as f64;
    let best = cumulative_counts(scores, same)
        .into_iter()
        .map(|(_, pos, neg)| pos + (n - neg))
        .fold(n, usize::max);
    Ok(best as f64 / total)
}

/// Fraction of probes whose most similar gallery entry carries the same
/// label. Ties go to the lower gallery index.
pub fn cmc_rank1(
    probes: ArrayView2<'_, f64>,
    probe_labels: &[usize],
    gallery: ArrayView2<'_, f64>,
    gallery_labels: &[usize],
) -> Result<f64> {
    if probes.nrows() != probe_labels.len() || gallery.nrows() != gallery_labels.len() {
        return Err(Error::DimensionMismatch("embedding rows vs labels".into()));
    }
    if probes.nrows() == 0 {
        return Err(Error::EmptyInput("probe set"));
    }
    if probes.ncols() != gallery.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "probe dimension {} vs gallery dimension {}",
            probes.ncols(),
            gallery.ncols()
        )));
    }
    if let Some(&missing) = probe_labels.iter().find(|l| !gallery_labels.contains(l)) {
        return Err(Error::MissingGalleryIdentity(missing));
    }
    let (probes, _) = normalize_rows(probes)?;
    let (gallery, _) = normalize_rows(gallery)?;
    let sims = probes.dot(&gallery.t());
    let hits = sims
        .axis_iter(Axis(0))
        .zip(probe_labels)
        .filter(|(row, &label)| {
            let mut best = 0;
            for (j, &s) in row.iter().enumerate() {
                if s > row[best] {
                    best = j;
                }
            }
            gallery_labels[best] == label
        })
        .count();
    Ok(hits as f64 / probe_labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub roc: Vec<RocPoint>,
    pub tpr_at_far: Vec<(f64, f64)>,
    pub cmc_rank1: f64,
    pub pair_accuracy: f64,
    pub mean_intra_cos: f64,
    pub mean_inter_cos: f64,
}

/// Evaluates labelled embeddings: every unordered pair forms a verification
/// pair, and the first `gallery_per_class` samples of each label form the
/// identification gallery with the remainder as probes.
pub fn evaluate_embeddings(
    embeddings: ArrayView2<'_, f64>,
    labels: &[usize],
    far_levels: &[f64],
    gallery_per_class: usize,
) -> Result<EvalReport> {
    if embeddings.nrows() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} embeddings but {} labels",
            embeddings.nrows(),
            labels.len()
        )));
    }
    let (unit, _) = normalize_rows(embeddings)?;
    let sims = unit.dot(&unit.t());
    let n = labels.len();
    let mut scores = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut same = Vec::with_capacity(scores.capacity());
    for i in 0..n {
        for j in i + 1..n {
            scores.push(sims[[i, j]]);
            same.push(labels[i] == labels[j]);
        }
    }
    let mean_of = |want: bool| {
        let (sum, count) = scores
            .iter()
            .zip(&same)
            .filter(|(_, &s)| s == want)
            .fold((0.0, 0usize), |(acc, c), (v, _)| (acc + v, c + 1));
        if count == 0 { 0.0 } else { sum / count as f64 }
    };

    let mut seen = std::collections::HashMap::new();
    let (mut gallery_idx, mut probe_idx) = (Vec::new(), Vec::new());
    for (i, &l) in labels.iter().enumerate() {
        let c = seen.entry(l).or_insert(0usize);
        if *c < gallery_per_class {
            gallery_idx.push(i);
        } else {
            probe_idx.push(i);
        }
        *c += 1;
    }
    let pick = |idx: &[usize]| (embeddings.select(Axis(0), idx), idx.iter().map(|&i| labels[i]).collect::<Vec<_>>());
    let (gallery, gallery_labels) = pick(&gallery_idx);
    let (probes, probe_labels) = pick(&probe_idx);

    Ok(EvalReport {
        roc: roc_curve(&scores, &same)?,
        tpr_at_far: tpr_at_far(&scores, &same, far_levels)?,
        cmc_rank1: cmc_rank1(probes.view(), &probe_labels, gallery.view(), &gallery_labels)?,
        pair_accuracy: pair_accuracy(&scores, &same)?,
        mean_intra_cos: mean_of(true),
        mean_inter_cos: mean_of(false),
    })
}
