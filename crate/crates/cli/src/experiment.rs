//! Train/evaluate pipelines over a method grid and over a range of `t`.

use std::path::Path;

use mvsoftmax::eval::{evaluate_embeddings, EvalReport};
use mvsoftmax::trainer::{generate_synthetic, train, EpochRecord, SyntheticData, TrainConfig};
use mvsoftmax::{LossConfig, MvMode};
use rayon::prelude::*;

use crate::config::ExperimentSpec;
use crate::error::{CliError, Result};
use crate::presets::resolve_methods;
use crate::report;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub name: String,
    pub loss: LossConfig,
    pub log: Vec<EpochRecord>,
    pub report: EvalReport,
}

impl MethodResult {
    pub fn first_loss(&self) -> f64 {
        self.log.first().map_or(f64::NAN, |r| r.mean_loss)
    }

    pub fn final_loss(&self) -> f64 {
        self.log.last().map_or(f64::NAN, |r| r.mean_loss)
    }
}

pub fn dataset(spec: &ExperimentSpec) -> Result<SyntheticData> {
    generate_synthetic(&spec.dataset).map_err(CliError::core("generating dataset"))
}

/// Trains one loss on the training split and evaluates the test split.
pub fn run_method(name: &str, loss: &LossConfig, spec: &ExperimentSpec, data: &SyntheticData) -> Result<MethodResult> {
    let config = TrainConfig { loss: *loss, ..spec.train.clone() };
    let outcome = train(&config, &data.train).map_err(CliError::core(format!("training {name}")))?;
    let embeddings = outcome
        .embed(data.test.inputs.view())
        .map_err(CliError::core(format!("embedding test split for {name}")))?;
    let report = evaluate_embeddings(embeddings.view(), &data.test.labels, &spec.eval_far_levels, spec.gallery_per_class)
        .map_err(CliError::core(format!("evaluating {name}")))?;
    Ok(MethodResult {
        name: name.to_string(),
        loss: *loss,
        log: outcome.log,
        report,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(CliError::io(path))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(CliError::io(path))
}

/// Writes `train_log.txt`, `roc.txt` and `summary.txt` into `dir`.
pub fn write_method(dir: &Path, result: &MethodResult) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("train_log.txt"), &report::train_log(&result.log))?;
    write(&dir.join("roc.txt"), &report::roc(&result.report.roc))?;
    write(&dir.join("summary.txt"), &report::summary(result))
}

/// Runs every method of the grid (concurrently), writes one subdirectory per
/// method and `comparison.txt` under `spec.output_dir`. Results come back in
/// grid order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MethodResult>> {
    let methods = resolve_methods(&spec.methods, &spec.hyper, &spec.train.loss)?;
    let data = dataset(spec)?;
    create_dir(&spec.output_dir)?;
    let results = methods
        .par_iter()
        .map(|(name, loss)| {
            let result = run_method(name, loss, spec, &data)?;
            write_method(&spec.output_dir.join(name), &result)?;
            Ok(result)
        })
        .collect::<Vec<Result<MethodResult>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let table = report::comparison("method", results.iter().map(|r| (r.name.clone(), r)));
    write(&spec.output_dir.join("comparison.txt"), &table)?;
    Ok(results)
}

/// One run per `t` for an MV method. Artifacts go to
/// `<output_dir>/sweep-<method>/t<value>/` with the table in
/// `<output_dir>/sweep-<method>/sweep_t.txt`.
pub fn sweep_t(spec: &ExperimentSpec, method: &str, t_values: &[f64]) -> Result<Vec<(f64, MethodResult)>> {
    if t_values.is_empty() {
        return Err(CliError::EmptySweep);
    }
    let (_, base) = resolve_methods(&[method.to_string()], &spec.hyper, &spec.train.loss)?
        .pop()
        .expect("one method");
    if base.mv_mode == MvMode::Off {
        return Err(CliError::NotMvMethod(method.to_string()));
    }
    if let Some(t) = t_values.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CliError::Config {
            path: "--t".into(),
            message: format!("t must be finite and >= 0, got {t}"),
        });
    }
    let data = dataset(spec)?;
    let root = spec.output_dir.join(format!("sweep-{method}"));
    create_dir(&root)?;
    let results = t_values
        .par_iter()
        .map(|&t| {
            let loss = LossConfig { t, ..base };
            let result = run_method(&format!("{method}@t={t}"), &loss, spec, &data)?;
            write_method(&root.join(format!("t{t}")), &result)?;
            Ok((t, result))
        })
        .collect::<Vec<Result<(f64, MethodResult)>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let table = report::comparison("t", results.iter().map(|(t, r)| (t.to_string(), r)));
    write(&root.join("sweep_t.txt"), &table)?;
    Ok(results)
}
