use serde::Serialize;

use crate::error::{ensure_finite, invalid, Error, Result};

/// Relative tolerance under which small negative eigenvalues are treated as
/// round-off and clamped to zero.
pub const NEGATIVE_CLAMP_TOLERANCE: f64 = 1e-10;

/// Descending, nonnegative eigenvalues of a sample covariance together with
/// the shape of the matrix they came from.
///
/// Only the `min(n_samples, d_features)` potentially nonzero eigenvalues are
/// kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSpectrum {
    values: Vec<f64>,
    n_samples: usize,
    d_features: usize,
}

impl EigenSpectrum {
    /// Builds a spectrum from raw eigenvalues in any order.
    ///
    /// Values are sorted descending, truncated to `min(n_samples, d_features)`,
    /// and negatives within `1e-10 * max` of zero are clamped.
    pub fn from_eigenvalues(
        mut values: Vec<f64>,
        n_samples: usize,
        d_features: usize,
    ) -> Result<Self> {
        if n_samples == 0 || d_features == 0 {
            return Err(invalid(
                "shape",
                "n_samples and d_features must be positive",
            ));
        }
        for &v in &values {
            ensure_finite(v, "eigenvalues")?;
        }
        values.sort_by(|a, b| b.total_cmp(a));
        values.truncate(n_samples.min(d_features));
        let top = values.first().copied().unwrap_or(0.0).max(0.0);
        let floor = -NEGATIVE_CLAMP_TOLERANCE * top;
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v >= floor {
                    *v = 0.0;
                } else {
                    return Err(Error::Degenerate("eigenvalue below zero beyond round-off"));
                }
            }
        }
        Ok(Self {
            values,
            n_samples,
            d_features,
        })
    }

    /// A spectrum from a square problem of the same size as `values`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let len = values.len().max(1);
        Self::from_eigenvalues(values, len, len)
    }

    /// Eigenvalues, descending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn d_features(&self) -> usize {
        self.d_features
    }

    /// Aspect ratio `d / n` of the source matrix.
    pub fn aspect_ratio(&self) -> f64 {
        self.d_features as f64 / self.n_samples as f64
    }

    pub fn largest(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Eigenvalues in ascending order.
    pub fn ascending(&self) -> Vec<f64> {
        self.values.iter().rev().copied().collect()
    }
}
