//! Transmissive regime: one delocalized mode whose frequency depends on both membranes.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Complex, DMatrix, Matrix3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::{drive_amplitude, Disorder, SystemParams, C_LIGHT, HBAR, K_B};

use super::LinearSystem;

/// Mode frequency for absolute membrane positions (m), measured from the left mirror.
///
/// Large phases are evaluated directly, so this is meant for positions of order
/// the wavelength or for coarse use; [`tr_frequency_shift`] is the accurate path
/// around the rest configuration.
pub fn tr_cavity_frequency(params: &SystemParams, q1: f64, q2: f64) -> f64 {
    let k = params.wavenumber();
    let sum_phase = k * (q1 + q2);
    let diff_phase = k * (q2 - q1);
    params.cavity_freq() + frequency_offset(params.mode_index, params.reflectivity, params.cavity_length, sum_phase, diff_phase).0
}

/// Shift of the mode frequency from nπc/L at the disordered rest positions
/// q⁰ = (L/3, 2L/3) + δq, with reflectivity `r`.
pub fn tr_frequency_shift(params: &SystemParams, disorder: &Disorder, r: f64) -> f64 {
    let (sum_phase, diff_phase) = rest_phases(params, disorder.dq1, disorder.dq2);
    frequency_offset(params.mode_index, r, params.cavity_length, sum_phase, diff_phase).0
}

/// Mode frequency at the disordered rest positions (rad/s).
pub fn tr_frequency(params: &SystemParams, disorder: &Disorder) -> f64 {
    params.cavity_freq() + tr_frequency_shift(params, disorder, params.reflectivity)
}

/// Phases k(q₁+q₂) and k(q₂−q₁), reduced exactly modulo 2π at rest.
fn rest_phases(params: &SystemParams, dq1: f64, dq2: f64) -> (f64, f64) {
    let n = params.mode_index;
    let k = params.wavenumber();
    let sum_phase = (n % 2) as f64 * PI + k * (dq1 + dq2);
    let diff_phase = (n % 6) as f64 * PI / 3.0 + k * (dq2 - dq1);
    (sum_phase, diff_phase)
}

/// Returns the frequency offset and the arcsin argument |F| used to compute it.
fn frequency_offset(n: u64, r: f64, length: f64, sum_phase: f64, diff_phase: f64) -> (f64, f64) {
    let sr = r.sqrt();
    let den = (1.0 + r * r - 2.0 * r * (2.0 * diff_phase).cos()).sqrt();
    if den == 0.0 {
        return (0.0, 0.0);
    }
    let f = 2.0 * sr * sum_phase.cos() * diff_phase.sin() / den;
    let theta = (sr * (2.0 * diff_phase).sin() / den).clamp(-1.0, 1.0).asin();
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    let scale = C_LIGHT / length;
    (parity * scale * f.clamp(-1.0, 1.0).asin() - scale * theta, f.abs())
}

/// Raw derivatives ∂ω/∂q_i of the frequency formula at the disordered rest positions.
///
/// Central differences with step h = max(1e-6·π/k, 1e-13 m), refined by two
/// levels of Richardson extrapolation over h, h/2, h/4.
pub fn tr_raw_couplings(params: &SystemParams, disorder: &Disorder, r: f64) -> Result<[f64; 2]> {
    let k = params.wavenumber();
    let h = (1e-6 * PI / k).max(1e-13);
    let mut out = [0.0; 2];
    for (i, slot) in out.iter_mut().enumerate() {
        let eval = |e: f64| -> Result<f64> {
            let d = disorder.shifted(i, e);
            let (sp, dp) = rest_phases(params, d.dq1, d.dq2);
            let (w, arg) = frequency_offset(params.mode_index, r, params.cavity_length, sp, dp);
            if arg > 1.0 - 1e-12 {
                return Err(Error::Solver {
                    what: format!("coupling derivative stencil touches the arcsin clamp (|F| = {arg:.15}) at dq{}", i + 1),
                    residual: 1.0 - arg,
                });
            }
            Ok(w)
        };
        let central = |step: f64| -> Result<f64> { Ok((eval(step)? - eval(-step)?) / (2.0 * step)) };
        let d1 = central(h)?;
        let d2 = central(h / 2.0)?;
        let d4 = central(h / 4.0)?;
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d4 - d2) / 3.0;
        *slot = (16.0 * r2 - r1) / 15.0;
    }
    Ok(out)
}

/// Scale factor mapping raw derivatives to couplings, fixed so that |g₁| = g at rest
/// for the calibration reflectivity.
pub fn tr_coupling_scale(params: &SystemParams) -> Result<f64> {
    let raw = tr_raw_couplings(params, &Disorder::ZERO, params.calibration_reflectivity)?[0];
    if raw == 0.0 || !raw.is_finite() {
        return Err(Error::Domain("the frequency formula has no slope at rest; couplings cannot be calibrated".into()));
    }
    Ok(params.coupling / raw.abs())
}

/// Disorder-shifted couplings (g₁, g₂) in rad/s/m.
pub fn tr_couplings(params: &SystemParams, disorder: &Disorder) -> Result<[f64; 2]> {
    let raw = tr_raw_couplings(params, disorder, params.reflectivity)?;
    if params.reflectivity == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let s = tr_coupling_scale(params)?;
    Ok([s * raw[0], s * raw[1]])
}

/// Inputs of the TR linear system: (g₁, g₂, Δ₀) after disorder.
pub fn tr_inputs(params: &SystemParams, disorder: &Disorder) -> Result<Vec<f64>> {
    let g = tr_couplings(params, disorder)?;
    let mut detuning = params.detuning;
    if params.tr_detuning_tracks_disorder && params.reflectivity > 0.0 {
        detuning += tr_coupling_scale(params)? * tr_frequency_shift(params, disorder, params.reflectivity);
    }
    Ok(vec![g[0], g[1], detuning])
}

/// Classical steady state of the TR model.
#[derive(Clone, Debug, Serialize)]
pub struct SteadyStateTR {
    #[serde(serialize_with = "super::ser_complex")]
    pub alpha: Complex<f64>,
    /// Mean membrane displacements (m).
    pub q: [f64; 2],
    /// Effective detuning Δ₀ + ħ(g₁²+g₂²)|α|²/(mω_m²) (rad/s).
    pub detuning: f64,
    /// Bare detuning the state was solved for (rad/s).
    pub bare_detuning: f64,
    pub couplings: [f64; 2],
    /// All non-negative real roots n̄ of the steady-state cubic, ascending.
    pub roots: Vec<f64>,
}

impl SteadyStateTR {
    pub fn photon_number(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// Solves the TR steady state for given couplings and bare detuning.
///
/// |ε|² = n̄[(κ/2)² + (Δ₀ + Cn̄)²] with C = ħ(g₁²+g₂²)/(mω_m²) is a real cubic in
/// n̄. Its roots come from companion-matrix eigenvalues, polished by Newton; the
/// smallest non-negative root is selected and all are reported.
pub fn tr_steady_state_from_inputs(params: &SystemParams, couplings: [f64; 2], detuning: f64) -> Result<SteadyStateTR> {
    let eps = drive_amplitude(params)?;
    let kappa = params.input_decay();
    let c = params.static_compliance() * (couplings[0].powi(2) + couplings[1].powi(2));
    let kk = 0.25 * kappa * kappa + detuning * detuning;

    let roots = if eps == 0.0 {
        vec![0.0]
    } else {
        let n0 = eps * eps / kk;
        // Normalized cubic a x³ + b x² + x − 1 = 0 with n̄ = n0·x.
        let a = c * c * n0 * n0 / kk;
        let b = 2.0 * detuning * c * n0 / kk;
        normalized_cubic_roots(a, b)?.into_iter().map(|x| x * n0).collect()
    };
    let nbar = roots[0];
    let delta = detuning + c * nbar;
    let alpha = Complex::new(eps, 0.0) / Complex::new(0.5 * kappa, delta);
    let n = alpha.norm_sqr();
    let compliance = params.static_compliance();
    let state = SteadyStateTR {
        alpha,
        q: [compliance * couplings[0] * n, compliance * couplings[1] * n],
        detuning: delta,
        bare_detuning: detuning,
        couplings,
        roots,
    };
    let res = tr_residual(params, &state)?;
    if res > 1e-10 {
        return Err(Error::Solver { what: "TR steady state violates the stationarity equation".into(), residual: res });
    }
    Ok(state)
}

/// Relative residual |ε − α(κ/2 + iΔ)|/ε of the stationarity condition.
pub fn tr_residual(params: &SystemParams, state: &SteadyStateTR) -> Result<f64> {
    let eps = drive_amplitude(params)?;
    let kappa = params.input_decay();
    let c = params.static_compliance() * (state.couplings[0].powi(2) + state.couplings[1].powi(2));
    let delta = state.bare_detuning + c * state.alpha.norm_sqr();
    let lhs = state.alpha * Complex::new(0.5 * kappa, delta);
    Ok(if eps == 0.0 { lhs.norm() } else { (lhs - eps).norm() / eps })
}

/// Steady state at a disorder.
pub fn solve_steady_state_tr(params: &SystemParams, disorder: &Disorder) -> Result<SteadyStateTR> {
    params.validate()?;
    disorder.validate(params.disorder_bound)?;
    let inputs = tr_inputs(params, disorder)?;
    tr_steady_state_from_inputs(params, [inputs[0], inputs[1]], inputs[2])
}

fn normalized_cubic_roots(a: f64, b: f64) -> Result<Vec<f64>> {
    let f = |x: f64| ((a * x + b) * x + 1.0) * x - 1.0;
    let df = |x: f64| (3.0 * a * x + 2.0 * b) * x + 1.0;
    let polish = |mut x: f64| {
        for _ in 0..50 {
            let d = df(x);
            if d == 0.0 {
                break;
            }
            let step = f(x) / d;
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1e-300) {
                break;
            }
        }
        x
    };
    let mut roots = Vec::new();
    if a == 0.0 {
        if b == 0.0 {
            roots.push(1.0);
        } else {
            // b x² + x − 1 = 0, stable form of the positive root.
            let disc = 1.0 + 4.0 * b;
            if disc >= 0.0 {
                let s = disc.sqrt();
                for x in [2.0 / (1.0 + s), if b != 0.0 { (-1.0 - s) / (2.0 * b) } else { -1.0 }] {
                    if x >= 0.0 {
                        roots.push(polish(x));
                    }
                }
            }
        }
    } else {
        let companion = Matrix3::new(-b / a, -1.0 / a, 1.0 / a, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        for z in companion.complex_eigenvalues().iter() {
            let tol = 1e-6 * z.norm().max(1.0);
            if z.im.abs() <= tol && z.re >= -tol {
                let x = polish(z.re.max(0.0));
                if x >= 0.0 && f(x).abs() <= 1e-10 * (1.0 + a * x.powi(3) + b.abs() * x * x + x) {
                    roots.push(x);
                }
            }
        }
        if roots.is_empty() {
            // Companion eigenvalues lose accuracy when a is tiny; the physical
            // root is then close to 1.
            let x = polish(1.0);
            if x >= 0.0 && f(x).abs() < 1e-12 {
                roots.push(x);
            }
        }
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * y.abs().max(1e-300));
    if roots.is_empty() {
        return Err(Error::Solver { what: "steady-state cubic has no non-negative real root".into(), residual: f64::NAN });
    }
    Ok(roots)
}

/// Dimensionless (A, D) for the ordering (X, Y, p₁, p₂, q₁, q₂).
pub fn tr_linear_system(params: &SystemParams, state: &SteadyStateTR) -> LinearSystem {
    let w = params.mech_freq;
    let units = params.units();
    let kappa = params.input_decay();
    let mut a = DMatrix::zeros(6, 6);
    a[(0, 0)] = -0.5 * kappa / w;
    a[(1, 1)] = -0.5 * kappa / w;
    a[(0, 1)] = state.detuning / w;
    a[(1, 0)] = -state.detuning / w;
    let field_to_pos = units.x_zpf / w;
    let field_to_mom = HBAR / (units.p_zpf * w);
    for i in 0..2 {
        let g = state.couplings[i];
        a[(0, 4 + i)] = SQRT_2 * g * state.alpha.im * field_to_pos;
        a[(1, 4 + i)] = -SQRT_2 * g * state.alpha.re * field_to_pos;
        a[(2 + i, 0)] = -SQRT_2 * g * state.alpha.re * field_to_mom;
        a[(2 + i, 1)] = -SQRT_2 * g * state.alpha.im * field_to_mom;
        a[(2 + i, 2 + i)] = -params.mech_damping / w;
        a[(2 + i, 4 + i)] = -1.0;
        a[(4 + i, 2 + i)] = 1.0;
    }
    let mut d = DMatrix::zeros(6, 6);
    d[(0, 0)] = 0.5 * kappa / w;
    d[(1, 1)] = 0.5 * kappa / w;
    let thermal = thermal_diffusion(params);
    d[(2, 2)] = thermal;
    d[(3, 3)] = thermal;
    LinearSystem { model: crate::physics::Model::Transmissive, a, d }
}

/// Momentum diffusion 2mγk_BT in zero-point units per 1/ω_m.
pub(crate) fn thermal_diffusion(params: &SystemParams) -> f64 {
    let units = params.units();
    2.0 * params.membrane_mass * params.mech_damping * K_B * params.temperature
        / (units.p_zpf * units.p_zpf * params.mech_freq)
}
