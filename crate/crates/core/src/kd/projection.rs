//! Outlier directions of a layer's activation covariance and the surgery that
//! narrows the layer onto them.

use nalgebra::DMatrix;

use super::net::{DenseLayer, DenseNet};
use crate::error::{invalid, Error, Result};
use crate::linalg::sorted_symmetric_eigen;
use crate::rmt::{EigenSpectrum, MpParams};

/// Post-activation outputs of layer `layer` (0-based), one column per
/// calibration sample: a `d x n` matrix.
pub fn collect_activations(
    net: &DenseNet,
    calib: &DMatrix<f64>,
    layer: usize,
) -> Result<DMatrix<f64>> {
    if layer >= net.layers().len() {
        return Err(invalid(
            "layer",
            format!(
                "index {layer} out of range for {} layers",
                net.layers().len()
            ),
        ));
    }
    let outs = net.forward_all(calib)?;
    Ok(outs.into_iter().nth(layer).expect("index checked"))
}

/// Indices into the descending spectrum with `lambda_i > lambda_plus`.
pub fn select_outliers(spectrum: &EigenSpectrum, params: &MpParams) -> Vec<usize> {
    let edge = params.lambda_plus();
    spectrum
        .values()
        .iter()
        .take_while(|&&v| v > edge)
        .enumerate()
        .map(|(i, _)| i)
        .collect()
}

/// Rows are unit eigenvectors of `covariance` for the chosen indices (into
/// the descending order), each with its first nonzero entry positive.
pub fn causal_projection(covariance: &DMatrix<f64>, outliers: &[usize]) -> Result<DMatrix<f64>> {
    if outliers.is_empty() {
        return Err(Error::Empty("outlier set"));
    }
    let d = covariance.nrows();
    if covariance.ncols() != d {
        return Err(Error::ShapeMismatch {
            context: "covariance",
            expected: d,
            actual: covariance.ncols(),
        });
    }
    if let Some(&bad) = outliers.iter().find(|&&i| i >= d) {
        return Err(invalid(
            "outliers",
            format!("index {bad} out of range for dimension {d}"),
        ));
    }
    let (_, vectors) = sorted_symmetric_eigen(covariance.clone());
    let mut p = DMatrix::zeros(outliers.len(), d);
    for (r, &i) in outliers.iter().enumerate() {
        let v = vectors.column(i);
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        for j in 0..d {
            p[(r, j)] = sign * v[j];
        }
    }
    Ok(p)
}

/// Largest entry of `|P P^T - I|`.
pub fn orthonormality_error(p: &DMatrix<f64>) -> f64 {
    let g = p * p.transpose();
    let k = g.nrows();
    (&g - DMatrix::<f64>::identity(k, k)).abs().max()
}

/// Folds `P` (`k x d`) into layer `layer`: `W <- P W`, `b <- P b`, and the
/// next layer's input weights become `W_next P^T`.
pub fn insert_projection(net: &DenseNet, layer: usize, p: &DMatrix<f64>) -> Result<DenseNet> {
    let layers = net.layers();
    if layer + 1 >= layers.len() {
        return Err(invalid(
            "layer",
            format!(
                "layer {layer} has no successor to resize ({} layers)",
                layers.len()
            ),
        ));
    }
    let d = layers[layer].out_width();
    if p.ncols() != d {
        return Err(Error::ShapeMismatch {
            context: "projection width",
            expected: d,
            actual: p.ncols(),
        });
    }
    let mut out: Vec<DenseLayer> = layers.to_vec();
    out[layer] = DenseLayer {
        weight: p * &layers[layer].weight,
        bias: p * &layers[layer].bias,
        activation: layers[layer].activation,
    };
    out[layer + 1] = DenseLayer {
        weight: &layers[layer + 1].weight * p.transpose(),
        bias: layers[layer + 1].bias.clone(),
        activation: layers[layer + 1].activation,
    };
    DenseNet::from_layers(out)
}
