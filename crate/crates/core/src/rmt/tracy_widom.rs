//! Largest-eigenvalue edge statistics.
//!
//! The real (beta = 1) Tracy–Widom CDF is carried as a tabulated empirical
//! distribution rather than solved from Painlevé II. The shipped table was
//! produced by [`simulate_edge_statistics`] with `n = d = 400` and 200 000
//! draws; regenerate it with `spectral tw-table`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::Serialize;

use super::marchenko_pastur::MpParams;
use crate::error::{ensure_finite, invalid, Error, Result};

const EMBEDDED_TABLE: &str = include_str!("../../data/tw1_cdf.tsv");

/// Centering and scale of the largest eigenvalue at the upper bulk edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwStandardization {
    pub center: f64,
    pub scale: f64,
}

impl TwStandardization {
    /// Real-Wishart edge scaling: centre `lambda_plus`, scale
    /// `sigma2 * n^(-2/3) * (1 + sqrt(q)) * (1 + 1/sqrt(q))^(1/3)`.
    pub fn for_params(params: &MpParams, n_samples: usize) -> Result<Self> {
        if n_samples < 2 {
            return Err(invalid(
                "n_samples",
                format!("need at least 2, got {n_samples}"),
            ));
        }
        let root = params.q().sqrt();
        let scale = params.sigma2()
            * (n_samples as f64).powf(-2.0 / 3.0)
            * (1.0 + root)
            * (1.0 + 1.0 / root).cbrt();
        Ok(Self {
            center: params.lambda_plus(),
            scale,
        })
    }

    pub fn apply(&self, lambda1: f64) -> f64 {
        (lambda1 - self.center) / self.scale
    }
}

/// Standardized edge statistic `(lambda1 - lambda_plus) / scale`.
pub fn tw_standardize(lambda1: f64, params: &MpParams, n_samples: usize) -> Result<f64> {
    ensure_finite(lambda1, "lambda1")?;
    Ok(TwStandardization::for_params(params, n_samples)?.apply(lambda1))
}

/// Two-column `(s, F(s))` table, nondecreasing in both columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TwTable {
    s: Vec<f64>,
    cdf: Vec<f64>,
}

impl TwTable {
    pub fn new(s: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if s.len() != cdf.len() {
            return Err(Error::ShapeMismatch {
                context: "tw table columns",
                expected: s.len(),
                actual: cdf.len(),
            });
        }
        if s.len() < 2 {
            return Err(Error::Empty("tw table"));
        }
        for w in s.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("tw table", "s column must be strictly increasing"));
            }
        }
        for w in cdf.windows(2) {
            if w[1] < w[0] {
                return Err(invalid("tw table", "cdf column must be nondecreasing"));
            }
        }
        if cdf.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
            return Err(invalid("tw table", "cdf values must lie in [0, 1]"));
        }
        Ok(Self { s, cdf })
    }

    /// Parses whitespace-separated two-column text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Vec::new();
        let mut cdf = Vec::new();
        let mut offset = 0u64;
        for line in text.lines() {
            let body = line.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                let mut cols = body.split_whitespace().map(str::parse::<f64>);
                match (cols.next(), cols.next(), cols.next()) {
                    (Some(Ok(a)), Some(Ok(b)), None) => {
                        s.push(a);
                        cdf.push(b);
                    }
                    _ => {
                        return Err(Error::Format {
                            format: "tw table",
                            offset,
                            reason: format!("expected two numeric columns, got `{body}`"),
                        })
                    }
                }
            }
            offset += line.len() as u64 + 1;
        }
        Self::new(s, cdf)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The table compiled into the crate.
    pub fn embedded() -> &'static TwTable {
        static TABLE: OnceLock<TwTable> = OnceLock::new();
        TABLE.get_or_init(|| TwTable::parse(EMBEDDED_TABLE).expect("embedded tw table is valid"))
    }

    /// Empirical CDF of `samples` evaluated on `grid`.
    pub fn from_samples(samples: &[f64], grid: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("samples"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let cdf = grid
            .iter()
            .map(|&g| sorted.partition_point(|&x| x <= g) as f64 / n)
            .collect();
        Self::new(grid.to_vec(), cdf)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn cdf_column(&self) -> &[f64] {
        &self.cdf
    }

    /// Interpolated CDF; 0 below the table and 1 above it.
    pub fn cdf(&self, s: f64) -> f64 {
        let last = self.s.len() - 1;
        if s < self.s[0] {
            return 0.0;
        }
        if s > self.s[last] {
            return 1.0;
        }
        let i = self.s.partition_point(|&x| x <= s).clamp(1, last);
        let (x0, x1) = (self.s[i - 1], self.s[i]);
        let t = (s - x0) / (x1 - x0);
        self.cdf[i - 1] + t * (self.cdf[i] - self.cdf[i - 1])
    }

    /// `1 - F(s)`.
    pub fn tail(&self, s: f64) -> f64 {
        1.0 - self.cdf(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# s\tF1(s)\n");
        for (s, f) in self.s.iter().zip(&self.cdf) {
            let _ = writeln!(out, "{s:.4}\t{f:.8}");
        }
        out
    }
}

/// Upper-tail probability of the standardized edge statistic under the
/// embedded table.
pub fn tw_tail_probability(s: f64) -> f64 {
    if s.is_nan() {
        return f64::NAN;
    }
    TwTable::embedded().tail(s)
}

/// Default evaluation grid of the shipped table: `[-6, 4]` in steps of 0.04.
pub fn default_grid() -> Vec<f64> {
    (0..=250).map(|i| -6.0 + 0.04 * i as f64).collect()
}

/// Standardized largest eigenvalues of `(1/n) X^T X` for `X` an `n x d`
/// standard Gaussian matrix, drawn through the bidiagonal chi model of the
/// real Wishart ensemble.
///
/// `B` is lower bidiagonal with diagonal `chi_{n}, chi_{n-1}, ..., chi_{n-d+1}`
/// and subdiagonal `chi_{d-1}, ..., chi_1`; `B B^T` shares its spectrum in
/// law with `X^T X`. The largest eigenvalue of the tridiagonal `B B^T` is
/// found by Sturm-count bisection.
pub fn simulate_edge_statistics(n: usize, d: usize, draws: usize, seed: u64) -> Result<Vec<f64>> {
    if d < 2 || n < d {
        return Err(invalid(
            "shape",
            format!("need n >= d >= 2, got n={n}, d={d}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag_dists: Vec<ChiSquared<f64>> = (0..d)
        .map(|i| ChiSquared::new((n - i) as f64).expect("positive dof"))
        .collect();
    let sub_dists: Vec<ChiSquared<f64>> = (0..d - 1)
        .map(|i| ChiSquared::new((d - 1 - i) as f64).expect("positive dof"))
        .collect();
    let params = MpParams::new(1.0, d as f64 / n as f64)?;
    let standard = TwStandardization::for_params(&params, n)?;

    let mut diag = vec![0.0; d];
    let mut off_sq = vec![0.0; d - 1];
    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x_sq: Vec<f64> = diag_dists.iter().map(|c| c.sample(&mut rng)).collect();
        let y_sq: Vec<f64> = sub_dists.iter().map(|c| c.sample(&mut rng)).collect();
        for i in 0..d {
            diag[i] = x_sq[i] + if i > 0 { y_sq[i - 1] } else { 0.0 };
        }
        for i in 0..d - 1 {
            off_sq[i] = x_sq[i] * y_sq[i];
        }
        let top = tridiagonal_largest_eigenvalue(&diag, &off_sq);
        out.push(standard.apply(top / n as f64));
    }
    Ok(out)
}

/// Largest eigenvalue of a symmetric tridiagonal matrix given its diagonal
/// and squared off-diagonal.
pub(crate) fn tridiagonal_largest_eigenvalue(diag: &[f64], off_sq: &[f64]) -> f64 {
    let m = diag.len();
    let mut hi = f64::MIN;
    let mut lo = f64::MAX;
    for i in 0..m {
        let left = if i > 0 { off_sq[i - 1].sqrt() } else { 0.0 };
        let right = if i + 1 < m { off_sq[i].sqrt() } else { 0.0 };
        hi = hi.max(diag[i] + left + right);
        lo = lo.min(diag[i] - left - right);
    }
    let count_below = |mu: f64| -> usize {
        let mut count = 0;
        let mut q = diag[0] - mu;
        for i in 0..m {
            if i > 0 {
                let prev = if q == 0.0 { f64::MIN_POSITIVE } else { q };
                q = diag[i] - mu - off_sq[i - 1] / prev;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let tol = 1e-13 * hi.abs().max(1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_zero_at_edge_and_increasing() {
        let p = MpParams::new(1.5, 0.3).unwrap();
        assert_eq!(tw_standardize(p.lambda_plus(), &p, 500).unwrap(), 0.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..50 {
            let s = tw_standardize(0.1 * i as f64, &p, 500).unwrap();
            assert!(s > prev);
            prev = s;
        }
        assert!(tw_standardize(1.0, &p, 1).is_err());
    }

    #[test]
    fn embedded_table_shape() {
        let t = TwTable::embedded();
        assert!(t.len() >= 200);
        assert!(t.s()[0] <= -6.0 + 1e-12);
        assert!(*t.s().last().unwrap() >= 4.0 - 1e-12);
    }

    #[test]
    fn tail_clamps_and_is_monotone() {
        assert_eq!(tw_tail_probability(-50.0), 1.0);
        assert_eq!(tw_tail_probability(50.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let p = tw_tail_probability(-8.0 + 0.013 * i as f64);
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn parse_rejects_garbage_with_offset() {
        let err = TwTable::parse("0 0.1\n1 0.5\nabc 1\n").unwrap_err();
        match err {
            Error::Format { offset, .. } => assert_eq!(offset, 12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(TwTable::parse("0 0.5\n1 0.4\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let t = TwTable::new(vec![-1.0, 0.0, 1.0], vec![0.1, 0.5, 0.9]).unwrap();
        assert_eq!(TwTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn tridiagonal_top_eigenvalue_matches_closed_form() {
        // diag(2,2,2) with unit off-diagonals: eigenvalues 2 - sqrt(2), 2, 2 + sqrt(2).
        let top = tridiagonal_largest_eigenvalue(&[2.0, 2.0, 2.0], &[1.0, 1.0]);
        assert!((top - (2.0 + 2f64.sqrt())).abs() < 1e-11);
    }
}
