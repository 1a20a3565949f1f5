//! Disorder derivatives of the stationary covariance.
//!
//! Disorder enters the dynamics only through a few model inputs (couplings and
//! detunings). ∂A/∂δq is assembled by the chain rule from ∂A/∂inputs, taken by
//! central differences with the steady state re-solved, and ∂inputs/∂δq, taken
//! by Richardson-extrapolated central differences on the optical scale. The
//! covariance derivative then follows from the differentiated Lyapunov equation.

use nalgebra::DMatrix;

use super::stationary::{stationary_covariance, StationaryState};
use crate::error::{Error, Result};
use crate::models::{check_stability, cc, input_scales, linear_system_from_inputs, tr, LinearSystem, SteadyState};
use crate::physics::{Disorder, Model, SystemParams};

/// Relative step for derivatives with respect to the model inputs.
const INPUT_STEP: f64 = 1e-6;
/// Disorder step in units of 1/k.
const DISORDER_STEP: f64 = 1e-4;

/// Stationary state at one disorder together with ∂σ/∂δq̃ᵢ, where δq̃ = δq/x_zpf.
#[derive(Clone, Debug)]
pub struct CovarianceDerivatives {
    pub inputs: Vec<f64>,
    pub steady: SteadyState,
    pub system: LinearSystem,
    pub stationary: StationaryState,
    /// ∂σ/∂δq̃₁ and ∂σ/∂δq̃₂, dimensionless.
    pub d_sigma: [DMatrix<f64>; 2],
    /// ∂A/∂δq̃₁ and ∂A/∂δq̃₂.
    pub d_a: [DMatrix<f64>; 2],
}

/// Model inputs without the disorder-bound check, so that steps near the bound
/// stay usable.
fn unchecked_inputs(params: &SystemParams, disorder: &Disorder) -> Result<Vec<f64>> {
    match params.model {
        Model::CoupledCavities => cc::cc_inputs(params, disorder),
        Model::Transmissive => tr::tr_inputs(params, disorder),
    }
}

/// Covariance derivatives through the model's own disorder map.
pub fn covariance_derivatives(params: &SystemParams, disorder: &Disorder) -> Result<CovarianceDerivatives> {
    disorder.validate(params.disorder_bound)?;
    covariance_derivatives_with(params, disorder, |d| unchecked_inputs(params, d))
}

/// Covariance derivatives for an arbitrary disorder → inputs map. The map must
/// return as many inputs as the model expects.
pub fn covariance_derivatives_with<F>(params: &SystemParams, disorder: &Disorder, inputs_of: F) -> Result<CovarianceDerivatives>
where
    F: Fn(&Disorder) -> Result<Vec<f64>>,
{
    let inputs = inputs_of(disorder)?;
    let (steady, system) = linear_system_from_inputs(params, &inputs)?;
    let stationary = stationary_covariance(&system)?;

    let scales = input_scales(params);
    let mut d_a_inputs = Vec::with_capacity(inputs.len());
    for (j, (&x, &s)) in inputs.iter().zip(&scales).enumerate() {
        let h = INPUT_STEP * x.abs().max(s);
        let shifted = |sign: f64| -> Result<DMatrix<f64>> {
            let mut v = inputs.clone();
            v[j] += sign * h;
            let (_, sys) = linear_system_from_inputs(params, &v)?;
            if !check_stability(&sys.a)?.is_stable() {
                return Err(Error::Solver {
                    what: format!("derivative step on model input {j} crosses the stability boundary"),
                    residual: h,
                });
            }
            Ok(sys.a)
        };
        d_a_inputs.push((shifted(1.0)? - shifted(-1.0)?) / (2.0 * h));
    }

    let x_zpf = params.units().x_zpf;
    let h = DISORDER_STEP / params.wavenumber();
    let mut d_a = [DMatrix::zeros(system.dim(), system.dim()), DMatrix::zeros(system.dim(), system.dim())];
    let mut d_sigma = d_a.clone();
    for i in 0..2 {
        let central = |step: f64| -> Result<Vec<f64>> {
            let plus = inputs_of(&disorder.shifted(i, step))?;
            let minus = inputs_of(&disorder.shifted(i, -step))?;
            Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * step)).collect())
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        let mut da = DMatrix::zeros(system.dim(), system.dim());
        for (j, dj) in d_a_inputs.iter().enumerate() {
            let dpi = (4.0 * fine[j] - coarse[j]) / 3.0;
            if dpi != 0.0 {
                da += dj * (dpi * x_zpf);
            }
        }
        d_sigma[i] = stationary.derivative(&da)?;
        d_a[i] = da;
    }
    Ok(CovarianceDerivatives { inputs, steady, system, stationary, d_sigma, d_a })
}
