//! Physical constants, experiment parameters and the zero-point unit layer.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;

/// Which effective description of the two-membrane cavity is simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Three inner cavities coupled by photon hopping (high reflectivity).
    #[serde(rename = "cc")]
    CoupledCavities,
    /// One delocalized mode coupled to both membranes.
    #[serde(rename = "tr")]
    Transmissive,
}

impl Model {
    /// Number of optical quadratures in the fluctuation vector.
    pub fn optical_dim(self) -> usize {
        match self {
            Model::CoupledCavities => 6,
            Model::Transmissive => 2,
        }
    }

    /// Total dimension of the fluctuation vector.
    pub fn dim(self) -> usize {
        self.optical_dim() + 4
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::CoupledCavities => "cc",
            Model::Transmissive => "tr",
        }
    }

    fn from_dim(dim: usize) -> Result<Self> {
        match dim {
            6 => Ok(Model::Transmissive),
            10 => Ok(Model::CoupledCavities),
            _ => Err(Error::Shape { expected: "6x6 or 10x10".into(), got: format!("{dim}x{dim}") }),
        }
    }
}

/// How the filtered output covariance is formed from the cavity block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputMode {
    /// The filter expressions applied to the full cavity covariance.
    #[serde(rename = "verbatim")]
    Verbatim,
    /// Only the excess over vacuum is filtered, so vacuum in gives vacuum out.
    #[serde(rename = "vacuum_consistent")]
    VacuumConsistent,
}

impl OutputMode {
    pub fn name(self) -> &'static str {
        match self {
            OutputMode::Verbatim => "verbatim",
            OutputMode::VacuumConsistent => "vacuum_consistent",
        }
    }
}

/// All physical constants and experimental settings of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub model: Model,
    /// Cavity length L (m).
    pub cavity_length: f64,
    /// Membrane mass m (kg).
    pub membrane_mass: f64,
    /// Mechanical angular frequency (rad/s).
    pub mech_freq: f64,
    /// Mechanical damping rate (1/s).
    pub mech_damping: f64,
    /// Decay rates of the three inner cavities; the single TR mode uses the first.
    pub cavity_decays: [f64; 3],
    /// Coupling per unit displacement (rad/s/m).
    pub coupling: f64,
    /// Photon hopping between inner cavities (rad/s).
    pub hopping: f64,
    /// Membrane field reflectivity used by the TR frequency formula.
    pub reflectivity: f64,
    /// Reflectivity at which TR couplings are calibrated to `coupling`.
    pub calibration_reflectivity: f64,
    /// Bath temperature (K).
    pub temperature: f64,
    /// Input laser power (W).
    pub laser_power: f64,
    /// Longitudinal mode index n of the empty cavity, ω = nπc/L.
    pub mode_index: u64,
    /// Detuning Δ₀ = ω_c − ω_L (rad/s).
    pub detuning: f64,
    /// Detection window τ (s).
    pub detection_window: f64,
    /// Filter center frequency Ω_l (rad/s), relative to the laser.
    pub filter_freq: f64,
    pub detector_efficiency: f64,
    /// Local oscillator phase θ (rad).
    pub lo_phase: f64,
    pub output_mode: OutputMode,
    /// TR only: let disorder shift the mode frequency relative to the laser.
    pub tr_detuning_tracks_disorder: bool,
    /// CC only: round-trip phase 2kq⁰ of each membrane at rest.
    pub cc_rest_phase: f64,
    /// Validation bound on |δq_i| (m).
    pub disorder_bound: f64,
}

impl SystemParams {
    /// The measured two-membrane experiment, with the unstated cavity length,
    /// wavelength and detuning filled by plausible defaults.
    pub fn measured_profile(model: Model) -> Self {
        let kappa = 2.0 * PI * 83e3;
        let mass = 0.72e-12;
        let mech_freq = 2.0 * PI * 235.81e6;
        let x_zpf = (HBAR / (2.0 * mass * mech_freq)).sqrt();
        let cavity_length = 0.09;
        let wavelength = 1064e-9;
        SystemParams {
            model,
            cavity_length,
            membrane_mass: mass,
            mech_freq,
            mech_damping: 2.0 * PI * 1.64,
            cavity_decays: [kappa, kappa / 100.0, kappa],
            coupling: 2.0 * PI * 0.30 / x_zpf,
            hopping: 2.0 * PI * 200e3,
            reflectivity: 0.33,
            calibration_reflectivity: 0.33,
            temperature: 300.0,
            laser_power: 130e-6,
            mode_index: mode_index_for(cavity_length, wavelength),
            detuning: 0.0,
            detection_window: 1.0 / kappa,
            filter_freq: 0.0,
            detector_efficiency: 1.0,
            lo_phase: match model {
                Model::CoupledCavities => 0.0,
                Model::Transmissive => FRAC_PI_2,
            },
            output_mode: OutputMode::Verbatim,
            tr_detuning_tracks_disorder: false,
            cc_rest_phase: FRAC_PI_2,
            disorder_bound: cavity_length / 10.0,
        }
    }

    /// Checks positivity and range invariants.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 6] = [
            ("cavity_length", self.cavity_length),
            ("membrane_mass", self.membrane_mass),
            ("mech_freq", self.mech_freq),
            ("mech_damping", self.mech_damping),
            ("detection_window", self.detection_window),
            ("disorder_bound", self.disorder_bound),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        for (j, &k) in self.cavity_decays.iter().enumerate() {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::param("cavity_decays", format!("decay {} must be positive, got {k}", j + 1)));
            }
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::param("coupling", "must be non-negative"));
        }
        if !(self.hopping >= 0.0 && self.hopping.is_finite()) {
            return Err(Error::param("hopping", "must be non-negative"));
        }
        for (name, r) in [("reflectivity", self.reflectivity), ("calibration_reflectivity", self.calibration_reflectivity)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::param(name, format!("must lie in [0, 1), got {r}")));
            }
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::param("temperature", "must be non-negative"));
        }
        if !(self.laser_power >= 0.0 && self.laser_power.is_finite()) {
            return Err(Error::param("laser_power", "must be non-negative"));
        }
        if self.mode_index == 0 {
            return Err(Error::param("mode_index", "must be a positive integer"));
        }
        if self.model == Model::CoupledCavities && self.mode_index % 3 != 0 {
            return Err(Error::param("mode_index", "must be a multiple of 3 for the coupled-cavities model"));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            return Err(Error::param("detector_efficiency", "must lie in (0, 1]"));
        }
        if !self.detuning.is_finite() || !self.filter_freq.is_finite() || !self.lo_phase.is_finite() {
            return Err(Error::param("detuning", "detuning, filter_freq and lo_phase must be finite"));
        }
        if self.laser_freq() <= 0.0 {
            return Err(Error::param("detuning", "laser frequency must be positive"));
        }
        Ok(())
    }

    /// Empty-cavity mode frequency nπc/L (rad/s).
    pub fn cavity_freq(&self) -> f64 {
        self.mode_index as f64 * PI * C_LIGHT / self.cavity_length
    }

    /// Laser frequency ω_L = ω_c − Δ₀ (rad/s).
    pub fn laser_freq(&self) -> f64 {
        self.cavity_freq() - self.detuning
    }

    /// Optical wavenumber k = nπ/L (1/m).
    pub fn wavenumber(&self) -> f64 {
        self.mode_index as f64 * PI / self.cavity_length
    }

    /// Decay rate of the driven cavity.
    pub fn input_decay(&self) -> f64 {
        self.cavity_decays[0]
    }

    /// Decay rate of the cavity whose output is detected.
    pub fn output_decay(&self) -> f64 {
        match self.model {
            Model::CoupledCavities => self.cavity_decays[2],
            Model::Transmissive => self.cavity_decays[0],
        }
    }

    /// 1 − r of the high-reflectivity membranes implied by the hopping,
    /// from J = ω_c √(2(1 − r)). Kept separate because r itself rounds to 1.
    pub fn cc_reflectivity_complement(&self) -> f64 {
        let ratio = self.hopping / self.cavity_freq();
        0.5 * ratio * ratio
    }

    pub fn units(&self) -> UnitScale {
        UnitScale::new(self.membrane_mass, self.mech_freq)
    }

    /// ħ/(m ω_m²), the static displacement per photon per unit coupling.
    pub(crate) fn static_compliance(&self) -> f64 {
        HBAR / (self.membrane_mass * self.mech_freq * self.mech_freq)
    }
}

/// Longitudinal mode index closest to a given vacuum wavelength.
pub fn mode_index_for(cavity_length: f64, wavelength: f64) -> u64 {
    (2.0 * cavity_length / wavelength).round() as u64
}

/// Drive amplitude ε = √(2κP/ħω_L) of the driven cavity (1/s).
pub fn drive_amplitude(params: &SystemParams) -> Result<f64> {
    let kappa = params.input_decay();
    let omega_l = params.laser_freq();
    if !(kappa > 0.0) {
        return Err(Error::param("cavity_decays", "input decay must be positive"));
    }
    if !(omega_l > 0.0) {
        return Err(Error::param("detuning", "laser frequency must be positive"));
    }
    if params.laser_power < 0.0 {
        return Err(Error::param("laser_power", "must be non-negative"));
    }
    Ok((2.0 * kappa * params.laser_power / (HBAR * omega_l)).sqrt())
}

/// Unknown static shifts of the two membranes from their rest positions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Disorder {
    pub dq1: f64,
    pub dq2: f64,
}

impl Disorder {
    pub const ZERO: Disorder = Disorder { dq1: 0.0, dq2: 0.0 };

    pub fn new(dq1: f64, dq2: f64) -> Self {
        Disorder { dq1, dq2 }
    }

    pub fn validate(&self, bound: f64) -> Result<()> {
        for (i, v) in [self.dq1, self.dq2].into_iter().enumerate() {
            if !v.is_finite() || v.abs() >= bound {
                return Err(Error::Domain(format!("disorder dq{} = {v:e} m violates |dq| < {bound:e} m", i + 1)));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.dq1, self.dq2]
    }

    pub fn component(&self, i: usize) -> f64 {
        if i == 0 { self.dq1 } else { self.dq2 }
    }

    /// Copy with component `i` moved by `h`.
    pub fn shifted(&self, i: usize, h: f64) -> Self {
        let mut d = *self;
        if i == 0 { d.dq1 += h } else { d.dq2 += h }
        d
    }
}

/// Zero-point scales of the mechanical oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitScale {
    pub x_zpf: f64,
    pub p_zpf: f64,
    /// 1/ω_m (s).
    pub time_scale: f64,
}

impl UnitScale {
    pub fn new(mass: f64, mech_freq: f64) -> Self {
        UnitScale {
            x_zpf: (HBAR / (2.0 * mass * mech_freq)).sqrt(),
            p_zpf: (HBAR * mass * mech_freq / 2.0).sqrt(),
            time_scale: 1.0 / mech_freq,
        }
    }

    /// Per-coordinate SI scales for the fluctuation vector of `model`.
    pub fn coordinate_scales(&self, model: Model) -> Vec<f64> {
        let mut s = vec![1.0; model.optical_dim()];
        s.extend([self.p_zpf, self.p_zpf, self.x_zpf, self.x_zpf]);
        s
    }
}

/// Congruence for covariances, similarity for dynamical matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    Covariance,
    Dynamical,
}

/// Maps an SI matrix to zero-point units (time in 1/ω_m).
pub fn to_dimensionless(units: &UnitScale, m: &DMatrix<f64>, kind: MatrixKind) -> Result<DMatrix<f64>> {
    rescale(units, m, kind, true)
}

/// Inverse of [`to_dimensionless`].
pub fn from_dimensionless(units: &UnitScale, m: &DMatrix<f64>, kind: MatrixKind) -> Result<DMatrix<f64>> {
    rescale(units, m, kind, false)
}

fn rescale(units: &UnitScale, m: &DMatrix<f64>, kind: MatrixKind, forward: bool) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape { expected: "square matrix".into(), got: format!("{}x{}", m.nrows(), m.ncols()) });
    }
    let model = Model::from_dim(m.nrows())?;
    let s = units.coordinate_scales(model);
    let n = m.nrows();
    let rate = 1.0 / units.time_scale;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let v = m[(i, j)];
        match (kind, forward) {
            (MatrixKind::Covariance, true) => v / (s[i] * s[j]),
            (MatrixKind::Covariance, false) => v * s[i] * s[j],
            (MatrixKind::Dynamical, true) => v * s[j] / (s[i] * rate),
            (MatrixKind::Dynamical, false) => v * s[i] * rate / s[j],
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_point_product_is_half_hbar() {
        let u = SystemParams::measured_profile(Model::Transmissive).units();
        assert!((u.x_zpf * u.p_zpf / (HBAR / 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_mode_index_is_a_multiple_of_three() {
        let p = SystemParams::measured_profile(Model::CoupledCavities);
        assert_eq!(p.mode_index, 169_173);
        assert_eq!(p.mode_index % 3, 0);
        p.validate().unwrap();
    }

    #[test]
    fn zero_power_gives_zero_drive() {
        let mut p = SystemParams::measured_profile(Model::Transmissive);
        p.laser_power = 0.0;
        assert_eq!(drive_amplitude(&p).unwrap(), 0.0);
    }

    #[test]
    fn drive_amplitude_matches_hand_evaluation() {
        let p = SystemParams::measured_profile(Model::Transmissive);
        // ω_L for n = 169173 in a 9 cm cavity, evaluated separately.
        let omega_l = 169_173.0 * std::f64::consts::PI * 299_792_458.0 / 0.09;
        let kappa = 2.0 * std::f64::consts::PI * 83e3;
        let hand = (2.0 * kappa * 130e-6 / (1.054_571_817e-34 * omega_l)).sqrt();
        let eps = drive_amplitude(&p).unwrap();
        assert!((eps / hand - 1.0).abs() < 1e-14);
        assert!(eps > 1e10 && eps < 1e12);
    }

    #[test]
    fn doubling_power_scales_drive_by_sqrt_two() {
        let mut p = SystemParams::measured_profile(Model::Transmissive);
        let e1 = drive_amplitude(&p).unwrap();
        p.laser_power *= 2.0;
        let e2 = drive_amplitude(&p).unwrap();
        assert!((e2 / e1 - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn drive_rejects_non_positive_laser_frequency() {
        let mut p = SystemParams::measured_profile(Model::Transmissive);
        p.detuning = 2.0 * p.cavity_freq();
        assert!(matches!(drive_amplitude(&p), Err(Error::Param { .. })));
    }

    #[test]
    fn identity_scaling_leaves_matrix_unchanged() {
        let units = UnitScale { x_zpf: 1.0, p_zpf: 1.0, time_scale: 1.0 };
        let m = DMatrix::from_fn(6, 6, |i, j| (i * 6 + j) as f64);
        assert_eq!(to_dimensionless(&units, &m, MatrixKind::Covariance).unwrap(), m);
        assert_eq!(to_dimensionless(&units, &m, MatrixKind::Dynamical).unwrap(), m);
    }

    #[test]
    fn position_variance_of_one_zero_point_is_unity() {
        let units = SystemParams::measured_profile(Model::Transmissive).units();
        let mut m = DMatrix::zeros(6, 6);
        m[(4, 4)] = units.x_zpf * units.x_zpf;
        let d = to_dimensionless(&units, &m, MatrixKind::Covariance).unwrap();
        assert!((d[(4, 4)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wrong_dimension_is_a_shape_error() {
        let units = SystemParams::measured_profile(Model::Transmissive).units();
        let m = DMatrix::zeros(5, 5);
        assert!(matches!(to_dimensionless(&units, &m, MatrixKind::Covariance), Err(Error::Shape { .. })));
    }

    #[test]
    fn disorder_bound_is_enforced() {
        assert!(Disorder::new(0.01, 0.0).validate(0.009).is_err());
        assert!(Disorder::new(1e-6, -1e-6).validate(0.009).is_ok());
    }
}
