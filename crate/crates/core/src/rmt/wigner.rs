use std::f64::consts::PI;

use crate::error::{ensure_finite, invalid, Result};

/// Semicircle density `sqrt(4 sigma2 - lambda^2) / (2 pi sigma2)` on
/// `|lambda| <= 2 sigma`.
pub fn wigner_density(lambda: f64, sigma2: f64) -> Result<f64> {
    ensure_finite(lambda, "lambda")?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(invalid(
            "sigma2",
            format!("must be positive and finite, got {sigma2}"),
        ));
    }
    let radius_sq = 4.0 * sigma2;
    let inside = radius_sq - lambda * lambda;
    if inside <= 0.0 {
        return Ok(0.0);
    }
    Ok(inside.sqrt() / (2.0 * PI * sigma2))
}
