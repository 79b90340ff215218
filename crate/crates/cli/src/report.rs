//! Text artifacts. Floats are written with Rust's shortest round-trip
//! formatting, so every file parses back to the exact values computed.

use std::fmt::Write;

use mvsoftmax::eval::RocPoint;
use mvsoftmax::trainer::EpochRecord;

use crate::experiment::MethodResult;

pub fn train_log(log: &[EpochRecord]) -> String {
    let mut out = String::new();
    for r in log {
        let histogram: Vec<String> = r.misclass_histogram.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "epoch={} lr={} mean_loss={} median_misclass_count={} wall_ms={} margin_overflow={} misclass_histogram={}",
            r.epoch,
            r.lr,
            r.mean_loss,
            r.median_misclass_count,
            r.wall_ms,
            r.margin_overflow,
            histogram.join(",")
        )
        .unwrap();
    }
    out
}

pub fn roc(points: &[RocPoint]) -> String {
    let mut out = String::from("# far tpr threshold\n");
    for p in points {
        writeln!(out, "{} {} {}", p.far, p.tpr, p.threshold).unwrap();
    }
    out
}

pub fn summary(result: &MethodResult) -> String {
    let r = &result.report;
    let mut out = String::new();
    writeln!(out, "method = {}", result.name).unwrap();
    for (far, tpr) in &r.tpr_at_far {
        writeln!(out, "tpr_at_far[{far}] = {tpr}").unwrap();
    }
    writeln!(out, "cmc_rank1 = {}", r.cmc_rank1).unwrap();
    writeln!(out, "pair_accuracy = {}", r.pair_accuracy).unwrap();
    writeln!(out, "mean_intra_cos = {}", r.mean_intra_cos).unwrap();
    writeln!(out, "mean_inter_cos = {}", r.mean_inter_cos).unwrap();
    writeln!(out, "first_epoch_loss = {}", result.first_loss()).unwrap();
    writeln!(out, "final_epoch_loss = {}", result.final_loss()).unwrap();
    out
}

/// Tab-separated table, one row per result, keyed by `key_header`.
pub fn comparison<'a>(key_header: &str, rows: impl IntoIterator<Item = (String, &'a MethodResult)>) -> String {
    let rows: Vec<_> = rows.into_iter().collect();
    let mut header = vec![key_header.to_string()];
    if let Some((_, first)) = rows.first() {
        header.extend(first.report.tpr_at_far.iter().map(|(far, _)| format!("tpr@far={far}")));
    }
    header.extend(
        ["cmc_rank1", "pair_accuracy", "mean_intra_cos", "mean_inter_cos", "first_epoch_loss", "final_epoch_loss"]
            .map(String::from),
    );
    let mut out = header.join("\t");
    out.push('\n');
    for (key, result) in rows {
        let r = &result.report;
        let mut cells = vec![key];
        cells.extend(r.tpr_at_far.iter().map(|(_, tpr)| tpr.to_string()));
        cells.extend(
            [r.cmc_rank1, r.pair_accuracy, r.mean_intra_cos, r.mean_inter_cos, result.first_loss(), result.final_loss()]
                .map(|v| v.to_string()),
        );
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}
