//! Thin wrappers over nalgebra's symmetric eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::Result;
use crate::rmt::EigenSpectrum;

/// Eigenvalues of a symmetric matrix, descending.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue; column
/// `i` of the returned matrix pairs with value `i`.
pub fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Spectrum of `(1/n) H^T H` for an `n x d` sample matrix.
///
/// The Gram matrix is formed on the smaller side, so the cost is
/// `O(n d min(n, d))`; both sides share their nonzero eigenvalues.
pub fn sample_covariance_spectrum(h: &DMatrix<f64>) -> Result<EigenSpectrum> {
    let (n, d) = h.shape();
    let gram = if n <= d {
        h * h.transpose()
    } else {
        // explicit transpose: the gemm path is far faster than tr_mul here
        h.transpose() * h
    };
    let values = symmetric_eigenvalues(gram / n as f64);
    EigenSpectrum::from_eigenvalues(values, n, d)
}

/// `(1/n) X X^T` for a `d x n` column-stacked activation matrix.
pub fn column_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols() as f64;
    (x * x.transpose()) / n
}
