//! Synthetic Gaussian-mixture classification task.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Samples stored one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub x: DMatrix<f64>,
    pub labels: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_columns(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub train: Split,
    pub validation: Split,
    pub test: Split,
}

impl TaskData {
    /// First `ceil(fraction * n_train)` training samples after a seeded
    /// shuffle.
    pub fn calibration(&self, fraction: f64, seed: u64) -> Result<Split> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid("calibration_fraction", "must lie in (0, 1]"));
        }
        let n = self.train.len();
        let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xca1b));
        idx.truncate(k);
        idx.sort_unstable();
        Ok(self.train.subset(&idx))
    }
}

/// Isotropic unit-variance clusters around class means drawn from
/// `N(0, mean_scale^2 I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureTask {
    pub input_dim: usize,
    pub classes: usize,
    pub mean_scale: f64,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for GaussianMixtureTask {
    fn default() -> Self {
        Self {
            input_dim: 32,
            classes: 10,
            mean_scale: 0.6,
            train: 4000,
            validation: 1000,
            test: 2000,
        }
    }
}

impl GaussianMixtureTask {
    pub fn generate(&self, seed: u64) -> Result<TaskData> {
        if self.input_dim == 0 || self.classes < 2 {
            return Err(invalid("task", "need input_dim >= 1 and classes >= 2"));
        }
        if self.train == 0 || self.validation == 0 || self.test == 0 {
            return Err(invalid("task", "every split needs samples"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let means = DMatrix::from_fn(self.input_dim, self.classes, |_, _| {
            self.mean_scale * rng.sample::<f64, _>(StandardNormal)
        });
        let mut draw = |n: usize| {
            let labels: Vec<usize> = (0..n).map(|i| i % self.classes).collect();
            let x = DMatrix::from_fn(self.input_dim, n, |r, c| {
                means[(r, labels[c])] + rng.sample::<f64, _>(StandardNormal)
            });
            Split { x, labels }
        };
        let train = draw(self.train);
        let validation = draw(self.validation);
        let test = draw(self.test);
        Ok(TaskData {
            train,
            validation,
            test,
        })
    }
}
