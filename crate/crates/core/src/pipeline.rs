//! End-to-end evaluation: steady state, stationary covariance, derivatives,
//! filtered output and Fisher information at one configuration.

use nalgebra::Matrix2;

use crate::error::Result;
use crate::gaussian::{covariance_derivatives, output_block, output_covariance, output_derivative, stationary_covariance, CovarianceDerivatives, OutputCovariance};
use crate::inference::{cfim, qfim, ForwardModel, InfoMatrices};
use crate::models::{linear_system_from_inputs, model_inputs, solve_steady_state};
use crate::physics::{Disorder, Model, SystemParams};

/// Cavity-level results at one (params, disorder), reusable across filter and
/// detection settings.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub params: SystemParams,
    pub disorder: Disorder,
    pub cavity: CovarianceDerivatives,
}

/// Filtered output state and its derivatives with respect to δq/x_zpf.
#[derive(Clone, Debug)]
pub struct OutputState {
    pub output: OutputCovariance,
    pub d_sigma: [Matrix2<f64>; 2],
    pub x_zpf: f64,
}

impl Evaluation {
    pub fn new(params: &SystemParams, disorder: &Disorder) -> Result<Self> {
        params.validate()?;
        if params.model == Model::CoupledCavities {
            // Surfaces multiple steady states, which the input-level solve skips.
            solve_steady_state(params, disorder)?;
        }
        let cavity = covariance_derivatives(params, disorder)?;
        Ok(Evaluation { params: params.clone(), disorder: *disorder, cavity })
    }

    /// Output mode at filter frequency `filter_freq` (rad/s), with the window,
    /// decay and mode of the stored parameters.
    pub fn output(&self, filter_freq: f64) -> Result<OutputState> {
        let p = &self.params;
        let model = p.model;
        let kappa = p.output_decay();
        let tau = p.detection_window;
        let output = output_covariance(&output_block(model, &self.cavity.stationary.sigma), kappa, tau, filter_freq, p.output_mode)?;
        let d_sigma = [
            output_derivative(&output_block(model, &self.cavity.d_sigma[0]), kappa, tau, filter_freq),
            output_derivative(&output_block(model, &self.cavity.d_sigma[1]), kappa, tau, filter_freq),
        ];
        Ok(OutputState { output, d_sigma, x_zpf: p.units().x_zpf })
    }

    pub fn max_real(&self) -> f64 {
        self.cavity.stationary.max_real
    }
}

impl OutputState {
    pub fn qfim(&self) -> Result<Matrix2<f64>> {
        qfim(&self.output.sigma, &self.d_sigma)
    }

    pub fn cfim(&self, theta: f64, eta: f64) -> Result<Matrix2<f64>> {
        cfim(&self.output.sigma, &self.d_sigma, theta, eta)
    }

    /// QFIM, CFIM and derived bounds in SI units.
    pub fn info(&self, theta: f64, eta: f64) -> Result<InfoMatrices> {
        Ok(InfoMatrices::from_dimensionless(&self.qfim()?, &self.cfim(theta, eta)?, self.x_zpf))
    }

    /// Derivatives with respect to δq in 1/m.
    pub fn d_sigma_si(&self) -> [Matrix2<f64>; 2] {
        [self.d_sigma[0] / self.x_zpf, self.d_sigma[1] / self.x_zpf]
    }
}

/// The full model as a forward map for estimation.
#[derive(Clone, Debug)]
pub struct ModelPipeline {
    pub params: SystemParams,
}

impl ModelPipeline {
    pub fn new(params: SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(ModelPipeline { params })
    }
}

impl ForwardModel for ModelPipeline {
    fn output_covariance(&self, filter_freq: f64, disorder: &Disorder) -> Result<Matrix2<f64>> {
        let p = &self.params;
        let (_, sys) = linear_system_from_inputs(p, &model_inputs(p, disorder)?)?;
        let st = stationary_covariance(&sys)?;
        let out = output_covariance(&output_block(p.model, &st.sigma), p.output_decay(), p.detection_window, filter_freq, p.output_mode)?;
        Ok(out.sigma)
    }

    fn output_with_derivatives(&self, filter_freq: f64, disorder: &Disorder) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])> {
        let e = Evaluation::new(&self.params, disorder)?;
        let o = e.output(filter_freq)?;
        Ok((o.output.sigma, o.d_sigma_si()))
    }
}
