//! Balanced homodyne detection of the output mode: outcome law, seeded sampling
//! and the sufficient statistic.

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::fisher::{check_efficiency, lo_direction};
use crate::error::{Error, Result};

/// Detection setting of one homodyne data set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    /// Local-oscillator phase θ in rad.
    pub theta: f64,
    /// Detector efficiency η.
    pub eta: f64,
    /// Filter centre frequency in rad/s.
    pub filter_freq: f64,
}

/// Zero-mean Gaussian law of the integrated photocurrent k, with precision
/// r = 4η / (1 − η + 2η R_θᵀ σ R_θ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HomodyneLaw {
    pub rate: f64,
    pub theta: f64,
    pub eta: f64,
}

impl HomodyneLaw {
    pub fn variance(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn pdf(&self, k: f64) -> f64 {
        (self.rate / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * self.rate * k * k).exp()
    }

    pub fn log_pdf(&self, k: f64) -> f64 {
        0.5 * (self.rate / (2.0 * std::f64::consts::PI)).ln() - 0.5 * self.rate * k * k
    }
}

/// Precision r for a given quadrature variance v = R_θᵀ σ R_θ.
pub fn homodyne_rate(v: f64, eta: f64) -> Result<f64> {
    check_efficiency(eta)?;
    if !(v > 0.0) {
        return Err(Error::Domain(format!("quadrature variance must be positive, got {v:e}")));
    }
    // At η = 1 this is exactly 2/v.
    Ok(4.0 * eta / (1.0 - eta + 2.0 * eta * v))
}

pub fn homodyne_pdf(sigma: &Matrix2<f64>, theta: f64, eta: f64) -> Result<HomodyneLaw> {
    let r = lo_direction(theta);
    let rate = homodyne_rate(r.dot(&(sigma * r)), eta)?;
    Ok(HomodyneLaw { rate, theta, eta })
}

/// Generator for one task: ChaCha20 seeded from `seed`, on stream `stream`.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// N i.i.d. outcomes from the law, on stream 0 of `seed`.
pub fn sample_homodyne(law: &HomodyneLaw, n: usize, seed: u64) -> Result<Vec<f64>> {
    sample_homodyne_stream(law, n, seed, 0)
}

pub fn sample_homodyne_stream(law: &HomodyneLaw, n: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Param { name: "N", reason: "sample size must be at least 1".into() });
    }
    let mut rng = task_rng(seed, stream);
    let sd = law.variance().sqrt();
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect())
}

/// T = Σ k².
pub fn sufficient_statistic(k: &[f64]) -> Result<f64> {
    if k.is_empty() {
        return Err(Error::Input("empty sample".into()));
    }
    Ok(k.iter().map(|x| x * x).sum())
}
