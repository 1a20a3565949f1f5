use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// Zero-mean Gaussian Wigner function exp(−Rᵀσ⁻¹R/2) / (2π√det σ).
pub fn wigner_at(sigma: &Matrix2<f64>, x: f64, y: f64) -> Result<f64> {
    let det = sigma.determinant();
    if !(det > 0.0) || sigma[(0, 0)] <= 0.0 {
        return Err(Error::Domain(format!("covariance is not positive definite (det = {det:e})")));
    }
    let inv = sigma.try_inverse().ok_or_else(|| Error::Domain("singular covariance".into()))?;
    let r = Vector2::new(x, y);
    let q = r.dot(&(inv * r));
    Ok((-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt()))
}
