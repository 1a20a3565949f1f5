//! The two effective models: disorder maps, steady states, linearized dynamics.

pub mod cc;
pub mod tr;

use nalgebra::{Complex, DMatrix};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::physics::{from_dimensionless, Disorder, MatrixKind, Model, SystemParams};

pub use cc::{
    cc_calibrated_coupling, cc_coupling, cc_disordered_frequencies, cc_inputs, cc_linear_system, solve_steady_state_cc,
    SteadyStateCC,
};
pub use tr::{
    solve_steady_state_tr, tr_cavity_frequency, tr_couplings, tr_frequency, tr_frequency_shift, tr_inputs,
    tr_linear_system, SteadyStateTR,
};

/// Dynamical matrix A and diffusion matrix D of the fluctuations, in zero-point
/// units with time measured in 1/ω_m.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub model: Model,
    pub a: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl LinearSystem {
    /// A in 1/s for SI coordinates.
    pub fn a_si(&self, params: &SystemParams) -> DMatrix<f64> {
        from_dimensionless(&params.units(), &self.a, MatrixKind::Dynamical).expect("model-sized matrix")
    }

    /// D in SI covariance units per second.
    pub fn d_si(&self, params: &SystemParams) -> DMatrix<f64> {
        from_dimensionless(&params.units(), &self.d, MatrixKind::Covariance).expect("model-sized matrix") * params.mech_freq
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Steady state of either model.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "model")]
pub enum SteadyState {
    #[serde(rename = "cc")]
    Cc(SteadyStateCC),
    #[serde(rename = "tr")]
    Tr(SteadyStateTR),
}

impl SteadyState {
    /// Mean photon number of the detected mode.
    pub fn output_photon_number(&self) -> f64 {
        match self {
            SteadyState::Cc(s) => s.photon_numbers()[2],
            SteadyState::Tr(s) => s.photon_number(),
        }
    }

    pub fn photon_numbers(&self) -> Vec<f64> {
        match self {
            SteadyState::Cc(s) => s.photon_numbers().to_vec(),
            SteadyState::Tr(s) => vec![s.photon_number()],
        }
    }
}

/// The small vector of model inputs through which disorder reaches the dynamics:
/// (g₁, g₂, Δ₀) for TR and (g₁, g₂, Δ₀₁, Δ₀₂, Δ₀₃) for CC.
pub fn model_inputs(params: &SystemParams, disorder: &Disorder) -> Result<Vec<f64>> {
    disorder.validate(params.disorder_bound)?;
    match params.model {
        Model::CoupledCavities => cc_inputs(params, disorder),
        Model::Transmissive => tr_inputs(params, disorder),
    }
}

/// Natural magnitude of each input, used to size finite-difference steps.
pub fn input_scales(params: &SystemParams) -> Vec<f64> {
    let n = match params.model {
        Model::CoupledCavities => 5,
        Model::Transmissive => 3,
    };
    (0..n).map(|j| if j < 2 { params.coupling.max(f64::MIN_POSITIVE) } else { params.input_decay() }).collect()
}

/// Steady state and linear system for given model inputs.
pub fn linear_system_from_inputs(params: &SystemParams, inputs: &[f64]) -> Result<(SteadyState, LinearSystem)> {
    match params.model {
        Model::CoupledCavities => {
            if inputs.len() != 5 {
                return Err(Error::Shape { expected: "5 CC inputs".into(), got: inputs.len().to_string() });
            }
            let s = cc::cc_steady_state_from_inputs(params, inputs, false)?;
            let sys = cc_linear_system(params, &s);
            Ok((SteadyState::Cc(s), sys))
        }
        Model::Transmissive => {
            if inputs.len() != 3 {
                return Err(Error::Shape { expected: "3 TR inputs".into(), got: inputs.len().to_string() });
            }
            let s = tr::tr_steady_state_from_inputs(params, [inputs[0], inputs[1]], inputs[2])?;
            let sys = tr_linear_system(params, &s);
            Ok((SteadyState::Tr(s), sys))
        }
    }
}

/// Steady state at a disorder (with the CC bistability check).
pub fn solve_steady_state(params: &SystemParams, disorder: &Disorder) -> Result<SteadyState> {
    match params.model {
        Model::CoupledCavities => solve_steady_state_cc(params, disorder).map(SteadyState::Cc),
        Model::Transmissive => solve_steady_state_tr(params, disorder).map(SteadyState::Tr),
    }
}

/// Linearized dynamics around the steady state of `state`.
pub fn dynamical_matrix(params: &SystemParams, state: &SteadyState) -> LinearSystem {
    match state {
        SteadyState::Cc(s) => cc_linear_system(params, s),
        SteadyState::Tr(s) => tr_linear_system(params, s),
    }
}

/// Outcome of the eigenvalue stability test.
#[derive(Clone, Debug, PartialEq)]
pub enum Stability {
    Stable { max_real: f64 },
    Unstable { eigenvalues: Vec<Complex<f64>> },
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable { .. })
    }

    pub fn into_result(self) -> Result<f64> {
        match self {
            Stability::Stable { max_real } => Ok(max_real),
            Stability::Unstable { eigenvalues } => Err(Error::Unstable {
                max_real: eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
                count: eigenvalues.len(),
            }),
        }
    }
}

/// Stable iff every eigenvalue has real part below −1e-12·‖A‖_F.
///
/// Eigenvalues replace the Routh–Hurwitz table; the two tests are equivalent.
pub fn check_stability(a: &DMatrix<f64>) -> Result<Stability> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape { expected: "square matrix".into(), got: format!("{}x{}", a.nrows(), a.ncols()) });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Solver { what: "non-finite entry in dynamical matrix".into(), residual: f64::NAN });
    }
    let tol = 1e-12 * a.norm();
    let eig = a.complex_eigenvalues();
    let offending: Vec<Complex<f64>> = eig.iter().copied().filter(|z| z.re >= -tol).collect();
    if offending.is_empty() {
        Ok(Stability::Stable { max_real: eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max) })
    } else {
        Ok(Stability::Unstable { eigenvalues: offending })
    }
}

pub(crate) fn ser_complex<S: Serializer>(z: &Complex<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub(crate) fn ser_complex3<S: Serializer>(z: &[Complex<f64>; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    z.map(|c| [c.re, c.im]).serialize(s)
}
