//! Marchenko–Pastur law: density, support, distribution table and the
//! histogram fit of the noise variance.

use std::f64::consts::PI;

use serde::Serialize;

use super::quadrature::gauss_legendre8;
use super::spectrum::EigenSpectrum;
use crate::error::{ensure_finite, invalid, Error, Result};

/// Default number of histogram bins for the noise-variance fit.
pub const DEFAULT_FIT_BINS: usize = 64;

/// Number of angular panels in [`MpDistribution`]'s cumulative table.
const TABLE_PANELS: usize = 512;

/// Noise variance and aspect ratio of a Marchenko–Pastur bulk, with the
/// support edges derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpParams {
    sigma2: f64,
    q: f64,
    lambda_minus: f64,
    lambda_plus: f64,
}

impl MpParams {
    pub fn new(sigma2: f64, q: f64) -> Result<Self> {
        let (lambda_minus, lambda_plus) = mp_support(sigma2, q)?;
        Ok(Self {
            sigma2,
            q,
            lambda_minus,
            lambda_plus,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    /// Mass of the continuous part of the law: `min(1, 1/q)`.
    pub fn continuous_mass(&self) -> f64 {
        (1.0 / self.q).min(1.0)
    }

    /// Density without input validation.
    pub(crate) fn density_at(&self, lambda: f64) -> f64 {
        if lambda <= self.lambda_minus || lambda >= self.lambda_plus || lambda <= 0.0 {
            return 0.0;
        }
        ((self.lambda_plus - lambda) * (lambda - self.lambda_minus)).sqrt()
            / (2.0 * PI * self.sigma2 * self.q * lambda)
    }
}

/// Bulk edges `sigma2 * (1 -/+ sqrt(q))^2`.
pub fn mp_support(sigma2: f64, q: f64) -> Result<(f64, f64)> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(invalid(
            "sigma2",
            format!("must be positive and finite, got {sigma2}"),
        ));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid(
            "q",
            format!("must be positive and finite, got {q}"),
        ));
    }
    let root = q.sqrt();
    Ok((sigma2 * (1.0 - root).powi(2), sigma2 * (1.0 + root).powi(2)))
}

/// Marchenko–Pastur density of the continuous part.
///
/// For `q > 1` the law also carries a point mass `1 - 1/q` at zero; it is not
/// part of the returned density, so the density integrates to `min(1, 1/q)`.
pub fn mp_density(lambda: f64, params: &MpParams) -> Result<f64> {
    ensure_finite(lambda, "lambda")?;
    Ok(params.density_at(lambda))
}

/// Cumulative distribution of the continuous MP part, conditioned on the
/// bulk, with its inverse.
///
/// The bulk is reparameterised by `lambda = lambda_minus + 2r sin^2(phi/2)`,
/// `r = (lambda_plus - lambda_minus) / 2`, which turns the square-root edges
/// into a smooth integrand on `[0, pi]`. A cumulative table over equal angular
/// panels is filled by Gauss–Legendre; evaluation inside a panel integrates
/// the remaining piece exactly, and the quantile solves for the angle by
/// safeguarded Newton iteration.
#[derive(Debug, Clone)]
pub struct MpDistribution {
    params: MpParams,
    half_width: f64,
    cumulative: Vec<f64>,
}

impl MpDistribution {
    pub fn new(params: MpParams) -> Self {
        let half_width = 0.5 * (params.lambda_plus - params.lambda_minus);
        let mut dist = Self {
            params,
            half_width,
            cumulative: Vec::with_capacity(TABLE_PANELS + 1),
        };
        let step = PI / TABLE_PANELS as f64;
        let mut acc = 0.0;
        dist.cumulative.push(0.0);
        for i in 0..TABLE_PANELS {
            let a = i as f64 * step;
            acc += gauss_legendre8(a, a + step, |phi| dist.angular_density(phi));
            dist.cumulative.push(acc);
        }
        dist
    }

    pub fn params(&self) -> &MpParams {
        &self.params
    }

    /// Numerically integrated mass of the continuous part.
    pub fn total_mass(&self) -> f64 {
        self.cumulative[TABLE_PANELS]
    }

    fn lambda_of(&self, phi: f64) -> f64 {
        let s = (0.5 * phi).sin();
        self.params.lambda_minus + 2.0 * self.half_width * s * s
    }

    fn phi_of(&self, lambda: f64) -> f64 {
        let x = ((lambda - self.params.lambda_minus) / (2.0 * self.half_width)).clamp(0.0, 1.0);
        2.0 * x.sqrt().asin()
    }

    /// Density with respect to the angle: `rho(lambda(phi)) * dlambda/dphi`.
    fn angular_density(&self, phi: f64) -> f64 {
        let lambda = self.lambda_of(phi);
        if lambda <= 0.0 {
            return 0.0;
        }
        let s = phi.sin();
        self.half_width * self.half_width * s * s
            / (2.0 * PI * self.params.sigma2 * self.params.q * lambda)
    }

    fn panel_of(&self, phi: f64) -> usize {
        let step = PI / TABLE_PANELS as f64;
        ((phi / step) as usize).min(TABLE_PANELS - 1)
    }

    fn unnormalized_cdf_at_angle(&self, phi: f64) -> f64 {
        let step = PI / TABLE_PANELS as f64;
        let i = self.panel_of(phi);
        let a = i as f64 * step;
        self.cumulative[i] + gauss_legendre8(a, phi, |p| self.angular_density(p))
    }

    /// Conditional CDF of the continuous bulk, in `[0, 1]`.
    pub fn cdf(&self, lambda: f64) -> f64 {
        if lambda <= self.params.lambda_minus {
            return 0.0;
        }
        if lambda >= self.params.lambda_plus {
            return 1.0;
        }
        (self.unnormalized_cdf_at_angle(self.phi_of(lambda)) / self.total_mass()).clamp(0.0, 1.0)
    }

    /// Inverse of [`cdf`](Self::cdf).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(
                "p",
                format!("probability must lie in [0, 1], got {p}"),
            ));
        }
        if p == 0.0 {
            return Ok(self.params.lambda_minus);
        }
        if p == 1.0 {
            return Ok(self.params.lambda_plus);
        }
        let target = p * self.total_mass();
        // First panel whose right end reaches the target.
        let i = self
            .cumulative
            .partition_point(|&c| c < target)
            .clamp(1, TABLE_PANELS)
            - 1;
        let step = PI / TABLE_PANELS as f64;
        let (mut lo, mut hi) = (i as f64 * step, (i + 1) as f64 * step);
        let (c_lo, c_hi) = (self.cumulative[i], self.cumulative[i + 1]);
        let mut phi = if c_hi > c_lo {
            lo + (target - c_lo) / (c_hi - c_lo) * step
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..60 {
            let f = self.unnormalized_cdf_at_angle(phi) - target;
            if f > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            let g = self.angular_density(phi);
            let newton = phi - f / g;
            if (newton - phi).abs() <= 1e-14 * PI {
                phi = newton.clamp(lo, hi);
                break;
            }
            phi = if g > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(self.lambda_of(phi))
    }
}

/// Quantile of the continuous MP part (see [`MpDistribution`]).
pub fn mp_quantile(p: f64, params: &MpParams) -> Result<f64> {
    MpDistribution::new(*params).quantile(p)
}

/// Conditional CDF of the continuous MP part.
pub fn mp_cdf(lambda: f64, params: &MpParams) -> Result<f64> {
    ensure_finite(lambda, "lambda")?;
    Ok(MpDistribution::new(*params).cdf(lambda))
}

/// The `tau`-quantile of the eigenvalues, linear interpolation between order
/// statistics.
pub fn estimate_sigma2_quantile(spectrum: &EigenSpectrum, tau: f64) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(invalid(
            "tau",
            format!("quantile must lie in [0, 1], got {tau}"),
        ));
    }
    let sorted = spectrum.ascending();
    Ok(interpolated_quantile(&sorted, tau))
}

/// Mean eigenvalue; an unbiased noise-variance estimate for pure noise.
pub fn estimate_sigma2_mean(spectrum: &EigenSpectrum) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    Ok(spectrum.trace() / spectrum.len() as f64)
}

pub(crate) fn interpolated_quantile(sorted_ascending: &[f64], tau: f64) -> f64 {
    let h = (sorted_ascending.len() - 1) as f64 * tau;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let lower = sorted_ascending[lo];
    lower + (h - lo as f64) * (sorted_ascending[hi] - lower)
}

/// Squared L2 distance between the eigenvalue histogram and the MP density at
/// bin centres, as a function of the noise variance.
///
/// The histogram spans `[0, 1.1 * max(lambda_1, lambda_plus(sigma2_init))]`
/// and is frozen at construction so the objective is comparable across
/// candidate variances.
#[derive(Debug, Clone)]
pub struct FitObjective {
    q: f64,
    centers: Vec<f64>,
    empirical: Vec<f64>,
}

impl FitObjective {
    pub fn new(spectrum: &EigenSpectrum, q: f64, sigma2_init: f64, bins: usize) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::Empty("spectrum"));
        }
        if bins < 16 {
            return Err(invalid(
                "bins",
                format!("need at least 16 bins, got {bins}"),
            ));
        }
        let init = MpParams::new(sigma2_init, q)?;
        let top = spectrum.largest().unwrap_or(0.0);
        let upper = 1.1 * top.max(init.lambda_plus());
        let width = upper / bins as f64;
        let counts = histogram_counts(spectrum.values(), upper, bins);
        let scale = init.continuous_mass() / (spectrum.len() as f64 * width);
        Ok(Self {
            q,
            centers: (0..bins).map(|j| (j as f64 + 0.5) * width).collect(),
            empirical: counts.iter().map(|&c| c as f64 * scale).collect(),
        })
    }

    pub fn evaluate(&self, sigma2: f64) -> f64 {
        let Ok(params) = MpParams::new(sigma2, self.q) else {
            return f64::INFINITY;
        };
        self.centers
            .iter()
            .zip(&self.empirical)
            .map(|(&c, &e)| {
                let diff = e - params.density_at(c);
                diff * diff
            })
            .sum()
    }
}

/// Bin counts of `values` over `[0, upper]`; values at or beyond `upper` fall
/// into the last bin.
pub(crate) fn histogram_counts(values: &[f64], upper: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = if upper > 0.0 {
            ((v / upper) * bins as f64).floor().max(0.0) as usize
        } else {
            0
        };
        counts[idx.min(bins - 1)] += 1;
    }
    counts
}

/// Refines the noise variance by golden-section search of [`FitObjective`]
/// over `[sigma2_init / 4, 4 * sigma2_init]`.
///
/// A nonpositive initial value (more than half the spectrum at zero) is
/// floored at `1e-12 * lambda_1`. The returned variance never scores worse
/// than the initial one.
pub fn fit_sigma2(
    spectrum: &EigenSpectrum,
    q: f64,
    sigma2_init: f64,
    bins: usize,
) -> Result<MpParams> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    ensure_finite(sigma2_init, "sigma2_init")?;
    let top = spectrum.largest().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::Degenerate("all eigenvalues are zero"));
    }
    let init = sigma2_init.max(1e-12 * top);
    let objective = FitObjective::new(spectrum, q, init, bins)?;
    let best = golden_section(|s| objective.evaluate(s), init / 4.0, 4.0 * init, 1e-4);
    let sigma2 = if objective.evaluate(best) <= objective.evaluate(init) {
        best
    } else {
        init
    };
    MpParams::new(sigma2, q)
}

/// Median-initialised fit: the default noise-bulk estimate.
pub fn fit_mp(spectrum: &EigenSpectrum, q: f64, tau: f64, bins: usize) -> Result<MpParams> {
    let init = estimate_sigma2_quantile(spectrum, tau)?;
    fit_sigma2(spectrum, q, init, bins)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo) > rel_tol * 0.5 * (hi + lo) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Critical population spike `sigma2 * (1 + sqrt(c))` above which a sample
/// eigenvalue detaches from the bulk.
pub fn bbp_threshold(sigma2: f64, c: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(invalid("sigma2", format!("must be positive, got {sigma2}")));
    }
    if !(c > 0.0) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    Ok(sigma2 * (1.0 + c.sqrt()))
}

/// Asymptotic sample-eigenvalue location `sigma2 * (theta + c*theta/(theta-1))`
/// of a population spike `theta > 1` (in units of `sigma2`).
pub fn spike_location(theta: f64, sigma2: f64, c: f64) -> Result<f64> {
    if !(theta > 1.0) {
        return Err(invalid("theta", format!("must exceed 1, got {theta}")));
    }
    Ok(sigma2 * (theta + c * theta / (theta - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn support_closed_forms() {
        assert_eq!(mp_support(1.0, 1.0).unwrap(), (0.0, 4.0));
        assert_eq!(mp_support(1.0, 0.25).unwrap(), (0.25, 2.25));
        assert_eq!(mp_support(2.0, 1.0).unwrap(), (0.0, 8.0));
        assert!(mp_support(0.0, 1.0).is_err());
        assert!(mp_support(1.0, -1.0).is_err());
    }

    #[test]
    fn density_midpoint_and_outside() {
        let p = MpParams::new(1.0, 1.0).unwrap();
        close(mp_density(2.0, &p).unwrap(), 1.0 / (2.0 * PI), 1e-12);
        assert_eq!(mp_density(4.5, &p).unwrap(), 0.0);
        assert_eq!(mp_density(-1.0, &p).unwrap(), 0.0);
        assert!(mp_density(f64::NAN, &p).is_err());
    }

    #[test]
    fn table_mass_matches_min_one_inverse_q() {
        for q in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let d = MpDistribution::new(MpParams::new(1.3, q).unwrap());
            close(d.total_mass(), (1.0f64 / q).min(1.0), 1e-10);
        }
    }

    #[test]
    fn quantile_endpoints_and_errors() {
        let p = MpParams::new(1.0, 0.5).unwrap();
        close(mp_quantile(0.0, &p).unwrap(), p.lambda_minus(), 0.0);
        close(mp_quantile(1.0, &p).unwrap(), p.lambda_plus(), 0.0);
        assert!(mp_quantile(1.5, &p).is_err());
        assert!(mp_quantile(-0.1, &p).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for q in [0.1, 1.0, 3.0] {
            let d = MpDistribution::new(MpParams::new(0.7, q).unwrap());
            let (a, b) = (d.params().lambda_minus(), d.params().lambda_plus());
            for i in 1..200 {
                let lambda = a + (b - a) * i as f64 / 200.0;
                let back = d.quantile(d.cdf(lambda)).unwrap();
                close(back, lambda, 1e-6);
            }
        }
    }

    #[test]
    fn quantile_of_sigma2_estimates() {
        let s = EigenSpectrum::from_values(vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(estimate_sigma2_quantile(&s, 0.5).unwrap(), 2.5);
        assert_eq!(estimate_sigma2_quantile(&s, 0.0).unwrap(), 1.0);
        assert_eq!(estimate_sigma2_quantile(&s, 1.0).unwrap(), 4.0);
        let c = EigenSpectrum::from_values(vec![0.3; 7]).unwrap();
        for tau in [0.0, 0.1, 0.45, 0.9, 1.0] {
            assert_eq!(estimate_sigma2_quantile(&c, tau).unwrap(), 0.3);
        }
        assert_eq!(estimate_sigma2_mean(&s).unwrap(), 2.5);
        let empty = EigenSpectrum::from_values(vec![]).unwrap();
        assert!(estimate_sigma2_quantile(&empty, 0.5).is_err());
    }

    #[test]
    fn fit_rejects_degenerate_and_small_bins() {
        let zeros = EigenSpectrum::from_values(vec![0.0; 8]).unwrap();
        assert!(matches!(
            fit_sigma2(&zeros, 1.0, 1.0, 64),
            Err(Error::Degenerate(_))
        ));
        let s = EigenSpectrum::from_values(vec![1.0, 0.5]).unwrap();
        assert!(fit_sigma2(&s, 1.0, 0.7, 8).is_err());
    }

    #[test]
    fn fit_is_no_worse_than_initial() {
        let s =
            EigenSpectrum::from_eigenvalues(vec![3.0, 2.2, 1.9, 1.1, 0.9, 0.4, 0.2, 0.1], 16, 8)
                .unwrap();
        for init in [0.05, 0.5, 1.0, 5.0] {
            let obj = FitObjective::new(&s, 0.5, init, 64).unwrap();
            let fit = fit_sigma2(&s, 0.5, init, 64).unwrap();
            assert!(obj.evaluate(fit.sigma2()) <= obj.evaluate(init));
        }
    }

    #[test]
    fn bbp_threshold_cases() {
        assert_eq!(bbp_threshold(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(bbp_threshold(1.0, 0.25).unwrap(), 1.5);
        assert_eq!(bbp_threshold(2.0, 1.0).unwrap(), 4.0);
        assert!(bbp_threshold(0.0, 1.0).is_err());
        assert!(bbp_threshold(1.0, 0.0).is_err());
    }

    #[test]
    fn spike_at_threshold_lands_on_edge() {
        for c in [0.05, 0.25, 1.0, 3.0] {
            let theta = bbp_threshold(1.0, c).unwrap();
            let (_, edge) = mp_support(1.0, c).unwrap();
            close(spike_location(theta, 1.0, c).unwrap(), edge, 1e-9);
        }
    }
}
