//! Experiment files. See the README for the format; every section is
//! optional except `name` and `output_dir`, and unknown keys are rejected.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use mvsoftmax::trainer::{SyntheticDatasetSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::presets::Hyperparameters;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub output_dir: PathBuf,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_far_levels")]
    pub eval_far_levels: Vec<f64>,
    /// Test samples per class placed in the identification gallery.
    #[serde(default = "default_gallery_per_class")]
    pub gallery_per_class: usize,
    #[serde(default)]
    pub hyper: Hyperparameters,
    #[serde(default)]
    pub dataset: SyntheticDatasetSpec,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_methods() -> Vec<String> {
    vec![crate::presets::PAPER_DEFAULTS.to_string()]
}

fn default_far_levels() -> Vec<f64> {
    vec![1e-2, 1e-3]
}

fn default_gallery_per_class() -> usize {
    1
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            output_dir: output_dir.into(),
            methods: default_methods(),
            eval_far_levels: default_far_levels(),
            gallery_per_class: default_gallery_per_class(),
            hyper: Hyperparameters::default(),
            dataset: SyntheticDatasetSpec::default(),
            train: TrainConfig::default(),
        }
    }

    /// Parses and validates. `origin` labels diagnostics.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        spec.validate().map_err(|message| CliError::Config {
            path: origin.to_string(),
            message,
        })?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    /// Field-level checks; the message names the offending key.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.methods.is_empty() {
            return Err("methods: list is empty".into());
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !seen.insert(m) {
                return Err(format!("methods: `{m}` listed twice"));
            }
        }
        if self.eval_far_levels.is_empty() {
            return Err("eval_far_levels: list is empty".into());
        }
        if let Some(f) = self.eval_far_levels.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(format!("eval_far_levels: {f} is outside (0, 1]"));
        }
        if self.gallery_per_class == 0 {
            return Err("gallery_per_class: must be at least 1".into());
        }
        self.dataset.validate().map_err(|e| format!("dataset: {e}"))?;
        let test_per_class = self.dataset.samples_per_class - self.dataset.train_per_class();
        if self.gallery_per_class >= test_per_class {
            return Err(format!(
                "gallery_per_class: {} leaves no probes among {test_per_class} test samples per class",
                self.gallery_per_class
            ));
        }
        self.train.validate().map_err(|e| format!("train: {e}"))?;
        for (name, value) in [
            ("scale", self.hyper.scale),
            ("m2", self.hyper.m2),
            ("m3", self.hyper.m3),
            ("gamma", self.hyper.gamma),
            ("keep_ratio", self.hyper.keep_ratio),
        ] {
            if !value.is_finite() {
                return Err(format!("hyper.{name}: must be finite"));
            }
        }
        for name in crate::presets::PRESETS {
            let loss = crate::presets::preset(name, &self.hyper).expect("listed preset");
            loss.validate().map_err(|e| format!("hyper (via {name}): {e}"))?;
        }
        Ok(())
    }
}
