//! Synthetic data: spiked-covariance samples and structured/noise activation
//! sequences.
//!
//! A spike `theta` is the population variance along its direction, so the
//! covariance is `sigma2 * I + sum (theta_i - sigma2) u_i u_i^T`. This is what
//! makes `theta = sigma2 * (1 + sqrt(q))` the detectability edge.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::container::{ActivationContainer, FLAG_STRUCTURED};
use crate::error::{invalid, Result};

pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Spike {
    pub theta: f64,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikedModelSpec {
    pub d: usize,
    pub n: usize,
    pub sigma2: f64,
    pub spikes: Vec<Spike>,
}

impl SpikedModelSpec {
    pub fn noise(d: usize, n: usize, sigma2: f64) -> Self {
        Self {
            d,
            n,
            sigma2,
            spikes: Vec::new(),
        }
    }

    /// Spikes with the given strengths along fresh random orthonormal
    /// directions drawn from `rng`.
    pub fn with_random_directions<R: Rng>(
        d: usize,
        n: usize,
        sigma2: f64,
        thetas: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        let dirs = random_orthonormal(d, thetas.len(), rng)?;
        Ok(Self {
            d,
            n,
            sigma2,
            spikes: thetas
                .iter()
                .zip(dirs)
                .map(|(&theta, direction)| Spike { theta, direction })
                .collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(invalid("d/n", "dimensions must be positive"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(invalid(
                "sigma2",
                format!("must be positive, got {}", self.sigma2),
            ));
        }
        for (i, s) in self.spikes.iter().enumerate() {
            if !(s.theta.is_finite() && s.theta > 0.0) {
                return Err(invalid("theta", format!("spike {i}: must be positive")));
            }
            if s.direction.len() != self.d {
                return Err(invalid(
                    "direction",
                    format!(
                        "spike {i} has length {}, expected {}",
                        s.direction.len(),
                        self.d
                    ),
                ));
            }
            for (j, t) in self.spikes.iter().enumerate().skip(i) {
                let dot: f64 = s
                    .direction
                    .iter()
                    .zip(&t.direction)
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > ORTHONORMAL_TOLERANCE {
                    return Err(invalid(
                        "direction",
                        format!("directions {i},{j} not orthonormal (dot = {dot})"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Population covariance, mostly for tests.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mut c = DMatrix::identity(self.d, self.d) * self.sigma2;
        for s in &self.spikes {
            let u = DVector::from_column_slice(&s.direction);
            c += (&u * u.transpose()) * (s.theta - self.sigma2);
        }
        c
    }
}

/// `k` orthonormal vectors of length `d` (Gram-Schmidt on Gaussian draws).
pub fn random_orthonormal<R: Rng>(d: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if k > d {
        return Err(invalid(
            "k",
            format!("cannot fit {k} orthonormal vectors in {d} dims"),
        ));
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        // two passes keep the basis orthonormal to rounding
        for _ in 0..2 {
            for u in &out {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|a| *a /= norm);
            out.push(v);
        }
    }
    Ok(out)
}

/// Fills `x` with one draw from the spiked Gaussian.
fn draw_row<R: Rng>(sigma: f64, spikes: &[(f64, &[f64])], rng: &mut R, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let projections: Vec<f64> = spikes
        .iter()
        .map(|(_, u)| u.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
        .collect();
    x.iter_mut().for_each(|v| *v *= sigma);
    for ((theta, u), p) in spikes.iter().zip(projections) {
        let coef = (theta.sqrt() - sigma) * p;
        x.iter_mut().zip(u.iter()).for_each(|(v, b)| *v += coef * b);
    }
}

/// `n x d` sample with rows i.i.d. from the spec's population covariance.
pub fn spiked_sample(spec: &SpikedModelSpec, seed: u64) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = spec.sigma2.sqrt();
    let spikes: Vec<(f64, &[f64])> = spec
        .spikes
        .iter()
        .map(|s| (s.theta, s.direction.as_slice()))
        .collect();
    let mut out = DMatrix::zeros(spec.n, spec.d);
    let mut row = vec![0.0; spec.d];
    for i in 0..spec.n {
        draw_row(sigma, &spikes, &mut rng, &mut row);
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Noise,
    Structured,
}

impl SequenceKind {
    pub fn flags(self) -> u16 {
        match self {
            Self::Noise => 0,
            Self::Structured => FLAG_STRUCTURED,
        }
    }

    pub fn from_flags(flags: u16) -> Self {
        if flags & FLAG_STRUCTURED != 0 {
            Self::Structured
        } else {
            Self::Noise
        }
    }
}

/// Shape of generated activation sequences. Structured sequences start with
/// `1..=max_spikes` spikes of strength drawn from `theta_range` (in units of
/// `sigma2`) and decay linearly to pure noise at the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub steps: usize,
    pub width: usize,
    pub sigma2: f64,
    pub max_spikes: usize,
    pub theta_range: (f64, f64),
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self {
            steps: 64,
            width: 64,
            sigma2: 1.0,
            max_spikes: 3,
            theta_range: (4.0, 12.0),
        }
    }
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.width < 2 {
            return Err(invalid("steps/width", "need steps >= 1 and width >= 2"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(invalid("sigma2", "must be positive"));
        }
        let (lo, hi) = self.theta_range;
        if !(lo.is_finite() && hi.is_finite() && 1.0 <= lo && lo <= hi) {
            return Err(invalid(
                "theta_range",
                format!("need 1 <= lo <= hi, got {lo}..{hi}"),
            ));
        }
        if self.max_spikes == 0 || self.max_spikes > self.width {
            return Err(invalid("max_spikes", "must be in 1..=width"));
        }
        Ok(())
    }
}

/// One `steps x width` sequence as a container.
pub fn generate_sequence(
    spec: &SequenceSpec,
    kind: SequenceKind,
    seed: u64,
) -> Result<ActivationContainer> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = spec.sigma2.sqrt();
    let (strengths, dirs) = match kind {
        SequenceKind::Noise => (Vec::new(), Vec::new()),
        SequenceKind::Structured => {
            let k = rng.random_range(1..=spec.max_spikes);
            let (lo, hi) = spec.theta_range;
            let strengths: Vec<f64> = (0..k)
                .map(|_| {
                    spec.sigma2
                        * if hi > lo {
                            rng.random_range(lo..=hi)
                        } else {
                            lo
                        }
                })
                .collect();
            let dirs = random_orthonormal(spec.width, k, &mut rng)?;
            (strengths, dirs)
        }
    };
    let mut data = Vec::with_capacity(spec.steps * spec.width);
    let mut row = vec![0.0; spec.width];
    let denom = (spec.steps.max(2) - 1) as f64;
    for t in 0..spec.steps {
        let remaining = 1.0 - t as f64 / denom;
        let spikes: Vec<(f64, &[f64])> = strengths
            .iter()
            .zip(&dirs)
            .map(|(&theta, u)| {
                (
                    spec.sigma2 + (theta - spec.sigma2) * remaining,
                    u.as_slice(),
                )
            })
            .collect();
        draw_row(sigma, &spikes, &mut rng, &mut row);
        data.extend(row.iter().map(|&v| v as f32));
    }
    ActivationContainer::new(kind.flags(), spec.width, data)
}
