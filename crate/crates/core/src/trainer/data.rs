//! Synthetic identity data: class directions on the sphere plus isotropic
//! Gaussian noise.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticDatasetSpec {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub input_dim: usize,
    pub class_direction_seed: u64,
    pub sample_seed: u64,
    /// Per-coordinate noise standard deviation is `1 / concentration`.
    pub concentration: f64,
    /// Fraction of each class assigned to the training split.
    pub train_fraction: f64,
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        Self {
            num_classes: 8,
            samples_per_class: 100,
            input_dim: 32,
            class_direction_seed: 7,
            sample_seed: 11,
            concentration: 20.0,
            train_fraction: 0.8,
        }
    }
}

impl SyntheticDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InfeasibleSpec(msg));
        if self.input_dim < 2 {
            return fail(format!("input_dim must be at least 2, got {}", self.input_dim));
        }
        if self.num_classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.samples_per_class == 0 {
            return fail("samples_per_class must be positive".into());
        }
        if self.concentration.is_nan() || self.concentration <= 0.0 {
            return fail(format!("concentration must be > 0, got {}", self.concentration));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return fail(format!("train_fraction must be in (0, 1], got {}", self.train_fraction));
        }
        Ok(())
    }

    pub fn train_per_class(&self) -> usize {
        ((self.train_fraction * self.samples_per_class as f64).floor() as usize).clamp(1, self.samples_per_class)
    }
}

/// Inputs (one row per sample) with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn select(&self, indices: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let inputs = self.inputs.select(ndarray::Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (inputs, labels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Dataset,
    pub test: Dataset,
    /// Unit class directions, one row per class.
    pub directions: Array2<f64>,
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(v: Array1<f64>) -> Array1<f64> {
    let n = v.dot(&v).sqrt();
    v / n
}

fn class_directions(spec: &SyntheticDatasetSpec) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.class_direction_seed);
    let (k, d) = (spec.num_classes, spec.input_dim);
    let mut dirs = Array2::zeros((k, d));
    for c in 0..k {
        let mut v = gaussian_vector(&mut rng, d);
        if d >= k {
            // Gram-Schmidt against the directions already drawn
            for prev in 0..c {
                let p = dirs.row(prev).to_owned();
                let proj = p.dot(&v);
                v.scaled_add(-proj, &p);
            }
        }
        dirs.row_mut(c).assign(&unit(v));
    }
    dirs
}

pub fn generate_synthetic(spec: &SyntheticDatasetSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let directions = class_directions(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.sample_seed);
    let noise_scale = 1.0 / spec.concentration;
    let n_train = spec.train_per_class();
    let n_test = spec.samples_per_class - n_train;
    let d = spec.input_dim;

    let mut train = (Vec::new(), Vec::new());
    let mut test = (Vec::new(), Vec::new());
    for c in 0..spec.num_classes {
        for s in 0..spec.samples_per_class {
            let noise = gaussian_vector(&mut rng, d);
            let x = &directions.row(c) + &(noise * noise_scale);
            let dst = if s < n_train { &mut train } else { &mut test };
            dst.0.extend(x.iter().copied());
            dst.1.push(c);
        }
    }
    let build = |(values, labels): (Vec<f64>, Vec<usize>), rows: usize| Dataset {
        inputs: Array2::from_shape_vec((rows, d), values).expect("row-major buffer"),
        labels,
        num_classes: spec.num_classes,
    };
    Ok(SyntheticData {
        train: build(train, n_train * spec.num_classes),
        test: build(test, n_test * spec.num_classes),
        directions,
    })
}
