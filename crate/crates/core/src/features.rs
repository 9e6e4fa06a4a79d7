//! The 22-slot spectral descriptor of an activation window.
//!
//! Slot registry (1-based, schema version [`SCHEMA_VERSION`]):
//!
//! | slot | name | unit |
//! |------|------|------|
//! | 1–5 | top-1..5 eigenvalue / trace | ratio |
//! | 6 | sum of top 5 eigenvalues | act² |
//! | 7 | spectral entropy | nats |
//! | 8 | entropy / ln(min(N, D)) | ratio |
//! | 9 | KL(empirical ‖ MP) | nats |
//! | 10 | W₁(empirical, MP) | act² |
//! | 11 | Tracy–Widom tail of λ₁ | probability |
//! | 12–14 | ln(λᵢ/λᵢ₊₁), i = 1..3, capped at ln 1e6 | log-ratio |
//! | 15 | skewness | dimensionless |
//! | 16 | excess kurtosis | dimensionless |
//! | 17 | trace | act² |
//! | 18 | effective rank exp(entropy) | count |
//! | 19 | fraction of eigenvalues above λ₊ | ratio |
//! | 20 | λ₁ / trace | ratio |
//! | 21 | median eigenvalue | act² |
//! | 22 | fitted noise variance σ² | act² |
//!
//! The gap-ratio slots are stored as natural logs; `exp` recovers the ratio.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::sample_covariance_spectrum;
use crate::rmt::{
    fit_mp, histogram_counts, interpolated_quantile, tw_standardize, EigenSpectrum, MpDistribution,
    MpParams, TwTable, DEFAULT_FIT_BINS,
};

pub const FEATURE_COUNT: usize = 22;
pub const SCHEMA_VERSION: u32 = 1;

/// Upper clamp applied to consecutive-eigenvalue ratios.
pub const GAP_RATIO_CAP: f64 = 1e6;
/// `lambda_{i+1} <= GAP_FLOOR * lambda_1` counts as a zero eigenvalue.
pub const GAP_FLOOR: f64 = 1e-12;
/// Smoothing mass added to every bin before the KL divergence.
pub const KL_SMOOTHING: f64 = 1e-8;

/// `(name, unit)` for every slot, in slot order.
pub const FEATURE_REGISTRY: [(&str, &str); FEATURE_COUNT] = [
    ("top1_over_trace", "ratio"),
    ("top2_over_trace", "ratio"),
    ("top3_over_trace", "ratio"),
    ("top4_over_trace", "ratio"),
    ("top5_over_trace", "ratio"),
    ("leading_sum_5", "activation^2"),
    ("spectral_entropy", "nats"),
    ("normalized_entropy", "ratio"),
    ("kl_to_mp", "nats"),
    ("wasserstein_to_mp", "activation^2"),
    ("tw_tail_probability", "probability"),
    ("log_gap_ratio_1", "log-ratio"),
    ("log_gap_ratio_2", "log-ratio"),
    ("log_gap_ratio_3", "log-ratio"),
    ("skewness", "dimensionless"),
    ("excess_kurtosis", "dimensionless"),
    ("trace", "activation^2"),
    ("effective_rank", "count"),
    ("fraction_above_lambda_plus", "ratio"),
    ("top1_share", "ratio"),
    ("median_eigenvalue", "activation^2"),
    ("fitted_sigma2", "activation^2"),
];

/// Renders the registry as the tab-separated schema file.
pub fn schema_text() -> String {
    let mut out = format!("# spectral descriptor schema v{SCHEMA_VERSION}\n# slot\tname\tunit\n");
    for (i, (name, unit)) in FEATURE_REGISTRY.iter().enumerate() {
        out.push_str(&format!("{}\t{}\t{}\n", i + 1, name, unit));
    }
    out
}

/// `N x D` block of activations, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationWindow {
    data: Vec<f64>,
    n_steps: usize,
    width: usize,
}

impl ActivationWindow {
    /// Builds a window from row-major data.
    pub fn new(data: Vec<f64>, n_steps: usize, width: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(invalid(
                "n_steps",
                format!("need at least 2 rows, got {n_steps}"),
            ));
        }
        if width < 2 {
            return Err(invalid(
                "width",
                format!("need at least 2 columns, got {width}"),
            ));
        }
        if data.len() != n_steps * width {
            return Err(Error::ShapeMismatch {
                context: "activation window",
                expected: n_steps * width,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("activation window"));
        }
        Ok(Self {
            data,
            n_steps,
            width,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * width);
        for row in rows {
            if row.len() != width {
                return Err(Error::ShapeMismatch {
                    context: "activation window row",
                    expected: width,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), width)
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_steps, self.width, &self.data)
    }

    /// Copy with every column shifted to zero mean.
    pub fn centered(&self) -> Self {
        let mut data = self.data.clone();
        for c in 0..self.width {
            let mean = (0..self.n_steps)
                .map(|r| self.data[r * self.width + c])
                .sum::<f64>()
                / self.n_steps as f64;
            for r in 0..self.n_steps {
                data[r * self.width + c] -= mean;
            }
        }
        Self { data, ..*self }
    }
}

/// One window's descriptor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVector {
    pub window_index: u64,
    pub values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    /// Value of a 1-based registry slot.
    pub fn slot(&self, slot: usize) -> f64 {
        self.values[slot - 1]
    }
}

/// Descriptor extraction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    /// Histogram bins for the noise-variance fit and KL slot.
    pub fit_bins: usize,
    /// Quantile initialising the noise-variance fit.
    pub sigma2_quantile: f64,
    /// Subtract column means before forming the covariance.
    pub center: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            fit_bins: DEFAULT_FIT_BINS,
            sigma2_quantile: 0.5,
            center: false,
        }
    }
}

/// Eigenvalues `sigma_i^2 / N` of the window's sample covariance.
pub fn eigenspectrum(window: &ActivationWindow) -> Result<EigenSpectrum> {
    sample_covariance_spectrum(&window.to_matrix())
}

/// Sum of the `k` largest eigenvalues.
pub fn leading_sum(spectrum: &EigenSpectrum, k: usize) -> f64 {
    spectrum.values().iter().take(k).sum()
}

/// Shannon entropy (nats) of the trace-normalised eigenvalues.
pub fn spectral_entropy(spectrum: &EigenSpectrum) -> Result<f64> {
    let trace = spectrum.trace();
    if !(trace > 0.0) {
        return Err(Error::Degenerate("zero trace"));
    }
    Ok(spectrum
        .values()
        .iter()
        .map(|&v| v / trace)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum())
}

/// Empirical bin probabilities of `values` over `[0, upper]`.
pub fn empirical_bin_masses(values: &[f64], upper: f64, bins: usize) -> Vec<f64> {
    let n = values.len() as f64;
    histogram_counts(values, upper, bins)
        .into_iter()
        .map(|c| c as f64 / n)
        .collect()
}

/// Probability the conditional MP bulk assigns to each of `bins` equal bins
/// over `[0, upper]`.
pub fn mp_bin_masses(dist: &MpDistribution, upper: f64, bins: usize) -> Vec<f64> {
    let width = upper / bins as f64;
    let mut prev = dist.cdf(0.0);
    (1..=bins)
        .map(|j| {
            let next = if j == bins {
                1.0
            } else {
                dist.cdf(j as f64 * width)
            };
            let mass = (next - prev).max(0.0);
            prev = next;
            mass
        })
        .collect()
}

/// `KL(p || q)` after adding `epsilon` to every bin of both and
/// renormalising.
pub fn smoothed_kl(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let zp: f64 = p.iter().map(|v| v + epsilon).sum();
    let zq: f64 = q.iter().map(|v| v + epsilon).sum();
    let kl: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let pa = (a + epsilon) / zp;
            let qb = (b + epsilon) / zq;
            pa * (pa / qb).ln()
        })
        .sum();
    kl.max(0.0)
}

/// Discrete KL divergence between the eigenvalue histogram and the MP bulk
/// over `[0, 1.1 * max(lambda_1, lambda_plus)]`.
pub fn kl_to_mp(spectrum: &EigenSpectrum, params: &MpParams, bins: usize) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    if bins == 0 {
        return Err(invalid("bins", "must be positive"));
    }
    Ok(kl_with(spectrum, &MpDistribution::new(*params), bins))
}

fn kl_with(spectrum: &EigenSpectrum, dist: &MpDistribution, bins: usize) -> f64 {
    let upper = 1.1
        * spectrum
            .largest()
            .unwrap_or(0.0)
            .max(dist.params().lambda_plus());
    let empirical = empirical_bin_masses(spectrum.values(), upper, bins);
    let reference = mp_bin_masses(dist, upper, bins);
    smoothed_kl(&empirical, &reference, KL_SMOOTHING)
}

/// `W1` between the eigenvalues and the continuous MP bulk by quantile
/// coupling: `mean |lambda_(i) - Q((i - 0.5) / m)|` over ascending values.
pub fn wasserstein_to_mp(spectrum: &EigenSpectrum, params: &MpParams) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    wasserstein_with(spectrum, &MpDistribution::new(*params))
}

fn wasserstein_with(spectrum: &EigenSpectrum, dist: &MpDistribution) -> Result<f64> {
    let m = spectrum.len();
    let mut total = 0.0;
    for (i, v) in spectrum.ascending().into_iter().enumerate() {
        let q = dist.quantile((i as f64 + 0.5) / m as f64)?;
        total += (v - q).abs();
    }
    Ok(total / m as f64)
}

/// Consecutive ratios `lambda_i / lambda_{i+1}` for `i = 1..=k`.
///
/// A ratio whose denominator is missing or at most `1e-12 * lambda_1` takes
/// [`GAP_RATIO_CAP`]; every ratio is clamped to that cap.
pub fn gap_ratios(spectrum: &EigenSpectrum, k: usize) -> Vec<f64> {
    let values = spectrum.values();
    let top = values.first().copied().unwrap_or(0.0);
    (0..k)
        .map(|i| {
            let num = values.get(i).copied().unwrap_or(0.0);
            let den = values.get(i + 1).copied().unwrap_or(0.0);
            if !(top > 0.0) || den <= GAP_FLOOR * top {
                GAP_RATIO_CAP
            } else {
                (num / den).min(GAP_RATIO_CAP)
            }
        })
        .collect()
}

/// Population moments of the eigenvalue multiset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralMoments {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    /// Plain (non-excess) kurtosis.
    pub kurtosis: f64,
}

/// Mean, standard deviation, skewness and kurtosis; the last two are 0 when
/// the spectrum is constant.
pub fn spectral_moments(spectrum: &EigenSpectrum) -> Result<SpectralMoments> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    let v = spectrum.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = m2.sqrt();
    if !(std > 1e-300) || std <= 1e-14 * mean.abs() {
        return Ok(SpectralMoments {
            mean,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }
    let m3 = v.iter().map(|x| ((x - mean) / std).powi(3)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| ((x - mean) / std).powi(4)).sum::<f64>() / n;
    Ok(SpectralMoments {
        mean,
        std,
        skewness: m3,
        kurtosis: m4,
    })
}

/// Descriptor with default settings and the given fit bin count.
pub fn descriptor_vector(window: &ActivationWindow, fit_bins: usize) -> Result<FeatureVector> {
    let config = FeatureConfig {
        fit_bins,
        ..FeatureConfig::default()
    };
    descriptor_vector_with(window, &config, TwTable::embedded())
}

/// Computes the full 22-slot descriptor of one window.
pub fn descriptor_vector_with(
    window: &ActivationWindow,
    config: &FeatureConfig,
    tw_table: &TwTable,
) -> Result<FeatureVector> {
    let spectrum = if config.center {
        eigenspectrum(&window.centered())?
    } else {
        eigenspectrum(window)?
    };
    descriptor_from_spectrum(&spectrum, config, tw_table)
}

/// Fills the registry slots from an already computed spectrum.
pub fn descriptor_from_spectrum(
    spectrum: &EigenSpectrum,
    config: &FeatureConfig,
    tw_table: &TwTable,
) -> Result<FeatureVector> {
    let trace = spectrum.trace();
    if !(trace > 0.0) {
        return Err(Error::Degenerate("window has zero energy"));
    }
    let q = spectrum.aspect_ratio();
    let params = fit_mp(spectrum, q, config.sigma2_quantile, config.fit_bins)?;
    let values = spectrum.values();
    let m = values.len();

    let mut out = [0.0; FEATURE_COUNT];
    for (i, slot) in out.iter_mut().take(5).enumerate() {
        *slot = values.get(i).copied().unwrap_or(0.0) / trace;
    }
    out[5] = leading_sum(spectrum, 5);
    let entropy = spectral_entropy(spectrum)?;
    out[6] = entropy;
    out[7] = if m > 1 {
        entropy / (m as f64).ln()
    } else {
        0.0
    };
    let dist = MpDistribution::new(params);
    out[8] = kl_with(spectrum, &dist, config.fit_bins);
    out[9] = wasserstein_with(spectrum, &dist)?;
    let s = tw_standardize(values[0], &params, spectrum.n_samples())?;
    out[10] = tw_table.tail(s);
    for (i, g) in gap_ratios(spectrum, 3).into_iter().enumerate() {
        out[11 + i] = g.ln();
    }
    let moments = spectral_moments(spectrum)?;
    out[14] = moments.skewness;
    out[15] = if moments.std > 0.0 {
        moments.kurtosis - 3.0
    } else {
        0.0
    };
    out[16] = trace;
    out[17] = entropy.exp();
    out[18] = values.iter().filter(|&&v| v > params.lambda_plus()).count() as f64 / m as f64;
    out[19] = values[0] / trace;
    out[20] = interpolated_quantile(&spectrum.ascending(), 0.5);
    out[21] = params.sigma2();

    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("descriptor"));
    }
    Ok(FeatureVector {
        window_index: 0,
        values: out,
    })
}
