//! Quantum and classical Fisher information of a single-mode Gaussian state with
//! respect to the two disorders.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};

/// Allowed shortfall of det σ below ¼.
const DET_TOL: f64 = 1e-10;
/// Relative eigenvalue cutoff for pseudo-inverses.
pub const PINV_CUTOFF: f64 = 1e-10;
/// H − F ⪰ −PSD_TOL·‖H‖.
pub const PSD_TOL: f64 = 1e-8;

/// Phase-space (Weyl) symbols of the two symmetric logarithmic derivatives,
/// L^i(R) = Rᵀ Φ^i R − ν^i.
#[derive(Clone, Debug, PartialEq)]
pub struct SldPhaseSpace {
    pub phi: [Matrix2<f64>; 2],
    pub nu: [f64; 2],
}

fn invert(sigma: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let det = sigma.determinant();
    if !(det.abs() > f64::EPSILON * sigma.norm_squared()) {
        return Err(Error::Domain(format!("output covariance is singular (det = {det:e})")));
    }
    sigma.try_inverse().ok_or_else(|| Error::Domain("output covariance is singular".into()))
}

fn sym(m: Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

/// Φ^i = ½ σ⁻¹ ∂ᵢσ σ⁻¹ and ν^i = Tr[Φ^i σ].
pub fn sld_phase_space(sigma: &Matrix2<f64>, d_sigma: &[Matrix2<f64>; 2]) -> Result<SldPhaseSpace> {
    let inv = invert(sigma)?;
    let phi = [sym(inv * d_sigma[0] * inv * 0.5), sym(inv * d_sigma[1] * inv * 0.5)];
    let nu = [(phi[0] * sigma).trace(), (phi[1] * sigma).trace()];
    Ok(SldPhaseSpace { phi, nu })
}

/// Closed-form quantum Fisher information matrix for the Gaussian state.
///
/// H_ij = 3 Tr[Φ^i σ Φ^j σ] − ν^i ν^j
///        + (det σ − ½)(Φ^i₁₁ Φ^j₂₂ + Φ^j₁₁ Φ^i₂₂ − 2 Φ^i₁₂ Φ^j₁₂).
pub fn qfim(sigma: &Matrix2<f64>, d_sigma: &[Matrix2<f64>; 2]) -> Result<Matrix2<f64>> {
    let det = sigma.determinant();
    if det < 0.25 - DET_TOL * det.abs().max(1.0) || sigma[(0, 0)] <= 0.0 {
        return Err(Error::Domain(format!("output covariance violates the uncertainty bound (det = {det:e} < 1/4)")));
    }
    let s = sld_phase_space(sigma, d_sigma)?;
    let mut h = Matrix2::zeros();
    for i in 0..2 {
        for j in i..2 {
            let (a, b) = (&s.phi[i], &s.phi[j]);
            let v = 3.0 * (a * sigma * b * sigma).trace() - s.nu[i] * s.nu[j]
                + (det - 0.5) * (a[(0, 0)] * b[(1, 1)] + b[(0, 0)] * a[(1, 1)] - 2.0 * a[(0, 1)] * b[(0, 1)]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// Local-oscillator direction R_θ = (cos θ, sin θ).
pub fn lo_direction(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

pub(crate) fn check_efficiency(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Param { name: "detector_efficiency", reason: format!("must lie in (0, 1], got {eta}") })
    }
}

/// Sensitivities vᵢ = R_θᵀ ∂ᵢσ R_θ of the homodyne variance.
pub fn sensitivities(d_sigma: &[Matrix2<f64>; 2], theta: f64) -> Vector2<f64> {
    let r = lo_direction(theta);
    Vector2::new(r.dot(&(d_sigma[0] * r)), r.dot(&(d_sigma[1] * r)))
}

/// Classical Fisher information of homodyne detection at phase θ and efficiency
/// η: F = 2η² v vᵀ / (1 − η + 2η R_θᵀ σ R_θ)².
pub fn cfim(sigma: &Matrix2<f64>, d_sigma: &[Matrix2<f64>; 2], theta: f64, eta: f64) -> Result<Matrix2<f64>> {
    check_efficiency(eta)?;
    let r = lo_direction(theta);
    let den = 1.0 - eta + 2.0 * eta * r.dot(&(sigma * r));
    if !(den > 0.0) {
        return Err(Error::Domain("homodyne variance is not positive".into()));
    }
    let v = sensitivities(d_sigma, theta);
    Ok(v * v.transpose() * (2.0 * eta * eta / (den * den)))
}

/// Trace-norm distance ‖H − F‖₁.
pub fn info_distance(h: &Matrix2<f64>, f: &Matrix2<f64>) -> f64 {
    let m = sym(h - f);
    SymmetricEigen::new(m).eigenvalues.iter().map(|x| x.abs()).sum()
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix and its numerical rank.
/// Eigenvalues at or below `PINV_CUTOFF`·max|λ| are treated as zero.
pub fn pinv_sym(m: &Matrix2<f64>) -> (Matrix2<f64>, usize) {
    let e = SymmetricEigen::new(sym(*m));
    let top = e.eigenvalues.amax();
    let mut out = Matrix2::zeros();
    let mut rank = 0;
    if top == 0.0 || !top.is_finite() {
        return (out, 0);
    }
    for k in 0..2 {
        let l = e.eigenvalues[k];
        if l.abs() > PINV_CUTOFF * top {
            let u = e.eigenvectors.column(k);
            out += u * u.transpose() / l;
            rank += 1;
        }
    }
    (out, rank)
}

/// Fisher-information summary at one setting, in SI units (1/m² and m²).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoMatrices {
    #[serde(serialize_with = "ser_m2")]
    pub h: Matrix2<f64>,
    #[serde(serialize_with = "ser_m2")]
    pub f: Matrix2<f64>,
    pub d: f64,
    /// Pseudo-inverse of H (the inverse when H has full rank).
    #[serde(serialize_with = "ser_m2")]
    pub h_inv: Matrix2<f64>,
    pub rank_h: usize,
    #[serde(serialize_with = "ser_m2")]
    pub f_pinv: Matrix2<f64>,
    pub rank_f: usize,
    /// Single-parameter bounds 1/F_ii (infinite when F_ii = 0).
    pub f_single: [f64; 2],
    /// Smallest eigenvalue of H − F.
    pub psd_margin: f64,
}

fn ser_m2<S: serde::Serializer>(m: &Matrix2<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
}

impl InfoMatrices {
    /// Builds the summary from matrices taken with respect to δq/x_zpf.
    pub fn from_dimensionless(h: &Matrix2<f64>, f: &Matrix2<f64>, x_zpf: f64) -> Self {
        let s = 1.0 / (x_zpf * x_zpf);
        let (h_inv, rank_h) = pinv_sym(h);
        let (f_pinv, rank_f) = pinv_sym(f);
        let h_si = h * s;
        let f_si = f * s;
        let psd_margin = SymmetricEigen::new(sym(h_si - f_si)).eigenvalues.min();
        InfoMatrices {
            h: h_si,
            f: f_si,
            d: info_distance(h, f) * s,
            h_inv: h_inv / s,
            rank_h,
            f_pinv: f_pinv / s,
            rank_f,
            f_single: [1.0 / f_si[(0, 0)], 1.0 / f_si[(1, 1)]],
            psd_margin,
        }
    }

    /// H − F ⪰ −1e-8·‖H‖.
    pub fn psd_ok(&self) -> bool {
        self.psd_margin >= -PSD_TOL * self.h.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Matrix2<f64> {
        Matrix2::identity() * 0.5
    }

    #[test]
    fn zero_derivative_has_no_information() {
        let z = [Matrix2::zeros(), Matrix2::zeros()];
        let s = sld_phase_space(&half(), &z).unwrap();
        assert_eq!(s.phi[0], Matrix2::zeros());
        assert_eq!(s.nu, [0.0, 0.0]);
        assert_eq!(qfim(&Matrix2::new(1.0, 0.2, 0.2, 0.8), &z).unwrap(), Matrix2::zeros());
    }

    #[test]
    fn sld_closed_form_substitution() {
        let d = [Matrix2::new(1.0, 0.0, 0.0, 0.0), Matrix2::zeros()];
        let s = sld_phase_space(&half(), &d).unwrap();
        assert!((s.phi[0] - Matrix2::new(2.0, 0.0, 0.0, 0.0)).amax() < 1e-15);
        assert!((s.nu[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_derivatives_give_rank_one_qfim() {
        let d = Matrix2::new(0.3, 0.1, 0.1, -0.2);
        let h = qfim(&Matrix2::new(1.1, 0.3, 0.3, 0.7), &[d, d]).unwrap();
        assert!((h[(0, 0)] - h[(1, 1)]).abs() < 1e-14 && (h[(0, 0)] - h[(0, 1)]).abs() < 1e-14);
    }

    #[test]
    fn unphysical_state_is_rejected() {
        let z = [Matrix2::zeros(), Matrix2::zeros()];
        assert!(matches!(qfim(&(Matrix2::identity() * 0.4), &z), Err(Error::Domain(_))));
    }

    #[test]
    fn cfim_closed_form_substitution() {
        let d = [Matrix2::new(1.0, 0.0, 0.0, 0.0), Matrix2::zeros()];
        let f = cfim(&half(), &d, 0.0, 1.0).unwrap();
        assert!((f - Matrix2::new(2.0, 0.0, 0.0, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn efficiency_domain() {
        let d = [Matrix2::identity(), Matrix2::zeros()];
        assert!(cfim(&half(), &d, 0.0, 0.0).is_err());
        assert!(cfim(&half(), &d, 0.0, 1.5).is_err());
    }

    #[test]
    fn distance_examples() {
        let h = Matrix2::new(1.0, 0.2, 0.2, 3.0);
        assert_eq!(info_distance(&h, &h), 0.0);
        assert!((info_distance(&Matrix2::new(3.0, 0.0, 0.0, -4.0), &Matrix2::zeros()) - 7.0).abs() < 1e-14);
    }

    #[test]
    fn pinv_of_rank_one() {
        let v = Vector2::new(3.0, 4.0);
        let (p, rank) = pinv_sym(&(v * v.transpose()));
        assert_eq!(rank, 1);
        let expect = v * v.transpose() / 625.0;
        assert!((p - expect).amax() < 1e-16);
    }

    #[test]
    fn si_conversion() {
        let h = Matrix2::new(2.0, 0.0, 0.0, 4.0);
        let info = InfoMatrices::from_dimensionless(&h, &Matrix2::zeros(), 1e-3);
        assert!((info.h[(0, 0)] - 2e6).abs() < 1e-6);
        assert!((info.h_inv[(1, 1)] - 0.25e-6).abs() < 1e-20);
        assert_eq!(info.rank_f, 0);
        assert!(info.f_single[0].is_infinite());
        assert!(info.psd_ok());
    }
}
