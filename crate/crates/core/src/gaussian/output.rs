//! Covariance of the filtered output mode selected by a finite detection window.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::{Model, OutputMode};

/// 2×2 covariance of (X_out, Y_out) for one filter setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputCovariance {
    #[serde(serialize_with = "ser_matrix2")]
    pub sigma: Matrix2<f64>,
    /// Filter centre frequency in rad/s.
    pub filter_freq: f64,
    /// Detection window in s.
    pub window: f64,
    pub mode: OutputMode,
}

fn ser_matrix2<S: serde::Serializer>(m: &Matrix2<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// ½κτ·sinc²(Ωτ/2).
pub fn filter_prefactor(decay: f64, window: f64, filter_freq: f64) -> f64 {
    let s = sinc(filter_freq * window / 2.0);
    0.5 * decay * window * s * s
}

/// Linear part of the filter map applied to a cavity block M:
/// ½κτ·sinc²(Ωτ/2) times the rotation-mixing of M by the angle Ωτ.
pub fn output_derivative(m: &Matrix2<f64>, decay: f64, window: f64, filter_freq: f64) -> Matrix2<f64> {
    let pref = filter_prefactor(decay, window, filter_freq);
    let (sn, cs) = (filter_freq * window).sin_cos();
    let (xx, xy, yy) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let oxx = (xx - yy) * cs + xx + 2.0 * xy * sn + yy;
    let oxy = (yy - xx) * sn + 2.0 * xy * cs;
    let oyy = (yy - xx) * cs + xx - 2.0 * xy * sn + yy;
    Matrix2::new(oxx, oxy, oxy, oyy) * pref
}

/// Output covariance from the detected cavity block.
///
/// Verbatim mode inserts the cavity covariance itself into the filter map.
/// Vacuum-consistent mode inserts its excess over vacuum, so an empty cavity
/// emits vacuum. Both add the ½ vacuum floor.
pub fn output_covariance(
    block: &Matrix2<f64>,
    decay: f64,
    window: f64,
    filter_freq: f64,
    mode: OutputMode,
) -> Result<OutputCovariance> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::Param { name: "detection_window", reason: format!("must be positive, got {window}") });
    }
    if !(decay >= 0.0) {
        return Err(Error::Param { name: "output decay", reason: format!("must be non-negative, got {decay}") });
    }
    let half = Matrix2::identity() * 0.5;
    let inner = match mode {
        OutputMode::Verbatim => *block,
        OutputMode::VacuumConsistent => block - half,
    };
    let sigma = half + output_derivative(&inner, decay, window, filter_freq);
    Ok(OutputCovariance { sigma, filter_freq, window, mode })
}

/// The 2×2 block of the detected cavity mode: (X₃, Y₃) for CC, (X, Y) for TR.
pub fn output_block(model: Model, m: &DMatrix<f64>) -> Matrix2<f64> {
    let o = match model {
        Model::CoupledCavities => 4,
        Model::Transmissive => 0,
    };
    Matrix2::new(m[(o, o)], m[(o, o + 1)], m[(o + 1, o)], m[(o + 1, o + 1)])
}
