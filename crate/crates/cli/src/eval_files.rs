//! Scoring externally produced embeddings.
//!
//! Embeddings file: one sample per line, `label v1 v2 ... vd`, whitespace
//! separated, with `label` a non-negative integer. Pairs file: one pair per
//! line, `i j`, zero-based row indices into the embeddings file; a pair is
//! genuine when both rows carry the same label. Blank lines and lines
//! starting with `#` are ignored in both.

use std::fmt::Write;
use std::path::Path;

use mvsoftmax::eval::{cmc_rank1, pair_accuracy, roc_curve, tpr_at_far, verification_scores, PairSet, RocPoint};
use ndarray::{Array2, Axis};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledEmbeddings {
    pub labels: Vec<usize>,
    pub vectors: Array2<f64>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_embeddings(text: &str, path: &Path) -> Result<LabelledEmbeddings> {
    let bad = |line: usize, message: String| CliError::Input {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut dim = None;
    for (line, content) in content_lines(text) {
        let mut fields = content.split_whitespace();
        let label = fields.next().expect("non-empty line");
        let label: usize = label.parse().map_err(|_| bad(line, format!("label `{label}` is not a non-negative integer")))?;
        let row = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad(line, format!("`{f}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None if row.len() < 2 => return Err(bad(line, "need at least two coordinates".into())),
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => return Err(bad(line, format!("{} coordinates, expected {d}", row.len()))),
            Some(_) => {}
        }
        labels.push(label);
        values.extend(row);
    }
    let Some(d) = dim else {
        return Err(bad(0, "no embeddings".into()));
    };
    let vectors = Array2::from_shape_vec((labels.len(), d), values).expect("rows of equal length");
    Ok(LabelledEmbeddings { labels, vectors })
}

pub fn parse_pairs(text: &str, path: &Path, rows: usize) -> Result<Vec<(usize, usize)>> {
    let bad = |line: usize, message: String| CliError::Input {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut pairs = Vec::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(bad(line, format!("expected `i j`, got {} fields", fields.len())));
        }
        let mut idx = [0; 2];
        for (slot, f) in idx.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| bad(line, format!("`{f}` is not a row index")))?;
            if *slot >= rows {
                return Err(bad(line, format!("row {slot} out of range for {rows} embeddings")));
            }
        }
        pairs.push((idx[0], idx[1]));
    }
    if pairs.is_empty() {
        return Err(bad(0, "no pairs".into()));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEvaluation {
    pub roc: Vec<RocPoint>,
    pub tpr_at_far: Vec<(f64, f64)>,
    pub pair_accuracy: f64,
    /// `None` when no label has more samples than the gallery takes.
    pub cmc_rank1: Option<f64>,
}

/// Verification metrics over the listed pairs; identification uses the first
/// `gallery_per_class` rows of each label as gallery and the rest as probes.
pub fn evaluate_pairs(
    emb: &LabelledEmbeddings,
    pairs: &[(usize, usize)],
    far_levels: &[f64],
    gallery_per_class: usize,
) -> Result<PairEvaluation> {
    let set = PairSet::new(
        pairs
            .iter()
            .map(|&(i, j)| (emb.vectors.row(i).to_owned(), emb.vectors.row(j).to_owned(), emb.labels[i] == emb.labels[j]))
            .collect(),
    )
    .map_err(CliError::core("building pair set"))?;
    let same = set.labels();
    let scores = verification_scores(&set).map_err(CliError::core("scoring pairs"))?;
    let ctx = || CliError::core("pair metrics");

    let mut seen = std::collections::HashMap::new();
    let (mut gallery, mut probes) = (Vec::new(), Vec::new());
    for (i, &l) in emb.labels.iter().enumerate() {
        let c = seen.entry(l).or_insert(0usize);
        if *c < gallery_per_class { gallery.push(i) } else { probes.push(i) }
        *c += 1;
    }
    let cmc = if probes.is_empty() {
        None
    } else {
        let labels = |idx: &[usize]| idx.iter().map(|&i| emb.labels[i]).collect::<Vec<_>>();
        let value = cmc_rank1(
            emb.vectors.select(Axis(0), &probes).view(),
            &labels(&probes),
            emb.vectors.select(Axis(0), &gallery).view(),
            &labels(&gallery),
        )
        .map_err(CliError::core("identification"))?;
        Some(value)
    };

    Ok(PairEvaluation {
        roc: roc_curve(&scores, &same).map_err(ctx())?,
        tpr_at_far: tpr_at_far(&scores, &same, far_levels).map_err(ctx())?,
        pair_accuracy: pair_accuracy(&scores, &same).map_err(ctx())?,
        cmc_rank1: cmc,
    })
}

pub fn summary(e: &PairEvaluation) -> String {
    let mut out = String::new();
    for (far, tpr) in &e.tpr_at_far {
        writeln!(out, "tpr_at_far[{far}] = {tpr}").unwrap();
    }
    writeln!(out, "pair_accuracy = {}", e.pair_accuracy).unwrap();
    if let Some(c) = e.cmc_rank1 {
        writeln!(out, "cmc_rank1 = {c}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_scores_a_small_set() {
        let emb = parse_embeddings("# toy\n0 1 0\n0 0.9 0.1\n\n1 0 1\n1 0.1 0.9\n", Path::new("e")).unwrap();
        assert_eq!(emb.labels, vec![0, 0, 1, 1]);
        let pairs = parse_pairs("0 1\n2 3\n0 2\n1 3\n", Path::new("p"), 4).unwrap();
        let e = evaluate_pairs(&emb, &pairs, &[0.5], 1).unwrap();
        assert_eq!(e.tpr_at_far, vec![(0.5, 1.0)]);
        assert_eq!(e.pair_accuracy, 1.0);
        assert_eq!(e.cmc_rank1, Some(1.0));
    }

    #[test]
    fn input_errors_carry_line_numbers() {
        let err = parse_embeddings("0 1 2\n1 3\n", Path::new("e.txt")).unwrap_err();
        assert_eq!(err.to_string(), "e.txt:2: 1 coordinates, expected 2");
        let err = parse_embeddings("0 1 x\n", Path::new("e.txt")).unwrap_err();
        assert!(err.to_string().contains("`x`"));
        let err = parse_pairs("0 1\n0 7\n", Path::new("p.txt"), 3).unwrap_err();
        assert_eq!(err.to_string(), "p.txt:2: row 7 out of range for 3 embeddings");
        assert_eq!(err.exit_code(), 1);
    }
}
