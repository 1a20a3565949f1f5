//! Coupled-cavities model: three inner cavities linked by photon hopping.

use std::f64::consts::SQRT_2;

use nalgebra::{Complex, DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::{drive_amplitude, Disorder, Model, SystemParams, C_LIGHT, HBAR};

use super::tr::thermal_diffusion;
use super::LinearSystem;

/// Frequencies ω_j ≈ ω_c[1 − 3(δq_j − δq_{j−1})/L] of the three inner cavities,
/// with δq₀ = δq₃ = 0.
pub fn cc_disordered_frequencies(params: &SystemParams, disorder: &Disorder) -> Result<[f64; 3]> {
    disorder.validate(params.disorder_bound)?;
    let wc = params.cavity_freq();
    let s = cc_frequency_shifts(params, disorder);
    Ok([wc + s[0], wc + s[1], wc + s[2]])
}

/// The frequency shifts ω_j − ω_c alone, without adding the large carrier.
pub fn cc_frequency_shifts(params: &SystemParams, disorder: &Disorder) -> [f64; 3] {
    let wc = params.cavity_freq();
    let l = params.cavity_length;
    let steps = [disorder.dq1, disorder.dq2 - disorder.dq1, -disorder.dq2];
    steps.map(|x| -wc * 3.0 * x / l)
}

/// Coupling g(q) = (nπc/L²)·√r·sin(2kq)/√(1 − r cos²(2kq)) for membrane position q (m).
pub fn cc_coupling(params: &SystemParams, q: f64) -> Result<f64> {
    let r = params.reflectivity;
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("reflectivity {r} outside [0, 1)")));
    }
    let phase = 2.0 * params.wavenumber() * q;
    let prefactor = params.mode_index as f64 * std::f64::consts::PI * C_LIGHT / (params.cavity_length * params.cavity_length);
    let c = phase.cos();
    Ok(prefactor * r.sqrt() * phase.sin() / (1.0 - r * c * c).sqrt())
}

/// Shape sin φ/√(sin²φ + (1−r)cos²φ) of the coupling, with 1 − r passed explicitly.
fn coupling_shape(phase: f64, one_minus_r: f64) -> f64 {
    let (s, c) = phase.sin_cos();
    s / (s * s + one_minus_r * c * c).sqrt()
}

/// Calibrated coupling of membrane i after a disorder δq, equal to `coupling` at rest.
///
/// The reflectivity comes from the hopping through J = ω_c√(2(1 − r)); its
/// complement is ~1e-19, so the shape is evaluated with 1 − r kept separately.
pub fn cc_calibrated_coupling(params: &SystemParams, dq: f64) -> Result<f64> {
    let e = params.cc_reflectivity_complement();
    let rest = coupling_shape(params.cc_rest_phase, e);
    if rest == 0.0 {
        return Err(Error::Domain("CC rest phase sits on a coupling node; cannot calibrate".into()));
    }
    let phase = params.cc_rest_phase + 2.0 * params.wavenumber() * dq;
    Ok(params.coupling * coupling_shape(phase, e) / rest)
}

/// Inputs of the CC linear system: (g₁, g₂, Δ₀₁, Δ₀₂, Δ₀₃), with Δ₀ⱼ = ω_j − ω_L.
pub fn cc_inputs(params: &SystemParams, disorder: &Disorder) -> Result<Vec<f64>> {
    let shifts = cc_frequency_shifts(params, disorder);
    Ok(vec![
        cc_calibrated_coupling(params, disorder.dq1)?,
        cc_calibrated_coupling(params, disorder.dq2)?,
        params.detuning + shifts[0],
        params.detuning + shifts[1],
        params.detuning + shifts[2],
    ])
}

/// Classical steady state of the CC model.
#[derive(Clone, Debug, Serialize)]
pub struct SteadyStateCC {
    #[serde(serialize_with = "super::ser_complex3")]
    pub alpha: [Complex<f64>; 3],
    /// Mean membrane displacements (m).
    pub q: [f64; 2],
    /// Effective detunings Δ_j (rad/s).
    pub detunings: [f64; 3],
    pub couplings: [f64; 2],
    /// Max-norm residual of the scaled stationarity equations.
    pub residual: f64,
}

impl SteadyStateCC {
    pub fn photon_numbers(&self) -> [f64; 3] {
        self.alpha.map(|a| a.norm_sqr())
    }
}

struct CcProblem {
    g: [f64; 2],
    bare: [f64; 3],
    kappa: [f64; 3],
    hopping: f64,
    eps: f64,
    compliance: f64,
    /// Amplitude and displacement scales used to make the unknowns O(1).
    a_scale: f64,
    q_scale: f64,
}

impl CcProblem {
    fn new(params: &SystemParams, inputs: &[f64]) -> Result<Self> {
        let eps = drive_amplitude(params)?;
        let kappa = params.cavity_decays;
        Ok(CcProblem {
            g: [inputs[0], inputs[1]],
            bare: [inputs[2], inputs[3], inputs[4]],
            kappa,
            hopping: params.hopping,
            eps,
            compliance: params.static_compliance(),
            a_scale: if eps > 0.0 { eps / kappa[0] } else { 1.0 },
            q_scale: params.units().x_zpf,
        })
    }

    fn detunings(&self, q: [f64; 2]) -> [f64; 3] {
        [
            self.bare[0] + self.g[0] * q[0],
            self.bare[1] - self.g[0] * q[0] + self.g[1] * q[1],
            self.bare[2] - self.g[1] * q[1],
        ]
    }

    fn matrix(&self, q: [f64; 2]) -> Matrix3<Complex<f64>> {
        let d = self.detunings(q);
        let j = Complex::new(0.0, self.hopping);
        let z = Complex::new(0.0, 0.0);
        let diag = |i: usize| Complex::new(0.5 * self.kappa[i], d[i]);
        Matrix3::new(diag(0), j, z, j, diag(1), j, z, j, diag(2))
    }

    /// Amplitudes solving the linear cavity equations at fixed displacements.
    fn linear_amplitudes(&self, q: [f64; 2]) -> Result<[Complex<f64>; 3]> {
        let rhs = Vector3::new(Complex::new(self.eps, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        let sol = self
            .matrix(q)
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Solver { what: "singular cavity matrix".into(), residual: f64::NAN })?;
        Ok([sol[0], sol[1], sol[2]])
    }

    fn unpack(&self, u: &DVector<f64>) -> ([Complex<f64>; 3], [f64; 2]) {
        let a = [0, 1, 2].map(|j| Complex::new(u[2 * j], u[2 * j + 1]) * self.a_scale);
        (a, [u[6] * self.q_scale, u[7] * self.q_scale])
    }

    fn pack(&self, a: &[Complex<f64>; 3], q: [f64; 2]) -> DVector<f64> {
        let mut u = DVector::zeros(8);
        for j in 0..3 {
            u[2 * j] = a[j].re / self.a_scale;
            u[2 * j + 1] = a[j].im / self.a_scale;
        }
        u[6] = q[0] / self.q_scale;
        u[7] = q[1] / self.q_scale;
        u
    }

    /// Scaled residual: cavity rows divided by κ₁·a_scale, displacement rows by x_zpf.
    fn residual(&self, u: &DVector<f64>) -> DVector<f64> {
        let (a, q) = self.unpack(u);
        let m = self.matrix(q);
        let av = Vector3::new(a[0], a[1], a[2]);
        let mut f = m * av;
        f[0] -= Complex::new(self.eps, 0.0);
        let norm = self.kappa[0] * self.a_scale;
        let n = a.map(|x| x.norm_sqr());
        let mut r = DVector::zeros(8);
        for j in 0..3 {
            r[2 * j] = f[j].re / norm;
            r[2 * j + 1] = f[j].im / norm;
        }
        r[6] = (q[0] - self.compliance * self.g[0] * (n[1] - n[0])) / self.q_scale;
        r[7] = (q[1] - self.compliance * self.g[1] * (n[2] - n[1])) / self.q_scale;
        r
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let (a, q) = self.unpack(u);
        let m = self.matrix(q);
        let norm = self.kappa[0] * self.a_scale;
        let mut jac = DMatrix::zeros(8, 8);
        // Cavity rows: complex-linear in α plus i(∂Δ_j/∂q_i)α_j.
        for j in 0..3 {
            for k in 0..3 {
                let c = m[(j, k)] * self.a_scale / norm;
                jac[(2 * j, 2 * k)] = c.re;
                jac[(2 * j, 2 * k + 1)] = -c.im;
                jac[(2 * j + 1, 2 * k)] = c.im;
                jac[(2 * j + 1, 2 * k + 1)] = c.re;
            }
        }
        let ddelta = [[self.g[0], 0.0], [-self.g[0], self.g[1]], [0.0, -self.g[1]]];
        for j in 0..3 {
            for i in 0..2 {
                let c = Complex::new(0.0, ddelta[j][i]) * a[j] * self.q_scale / norm;
                jac[(2 * j, 6 + i)] = c.re;
                jac[(2 * j + 1, 6 + i)] = c.im;
            }
        }
        // Displacement rows.
        for i in 0..2 {
            jac[(6 + i, 6 + i)] = 1.0;
            let k = self.compliance * self.g[i] * self.a_scale * self.a_scale / self.q_scale;
            let (lo, hi) = (i, i + 1);
            let ulo = (u[2 * lo], u[2 * lo + 1]);
            let uhi = (u[2 * hi], u[2 * hi + 1]);
            jac[(6 + i, 2 * hi)] = -k * 2.0 * uhi.0;
            jac[(6 + i, 2 * hi + 1)] = -k * 2.0 * uhi.1;
            jac[(6 + i, 2 * lo)] = k * 2.0 * ulo.0;
            jac[(6 + i, 2 * lo + 1)] = k * 2.0 * ulo.1;
        }
        jac
    }

    /// Damped Newton from `start`; halves the step up to 40 times when the residual grows.
    fn newton(&self, start: DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let mut u = start;
        let mut r = self.residual(&u);
        let mut rn = r.amax();
        for _ in 0..200 {
            if rn < 1e-14 {
                break;
            }
            let jac = self.jacobian(&u);
            let step = jac
                .lu()
                .solve(&(-&r))
                .ok_or_else(|| Error::Solver { what: "singular Newton Jacobian".into(), residual: rn })?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..=40 {
                let trial = &u + &step * lambda;
                let tr = self.residual(&trial);
                let tn = tr.amax();
                if tn < rn {
                    u = trial;
                    r = tr;
                    rn = tn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if rn > 1e-10 || !rn.is_finite() {
            return Err(Error::Solver { what: "CC steady-state Newton iteration did not converge".into(), residual: rn });
        }
        Ok((u, rn))
    }

    fn state(&self, u: &DVector<f64>, residual: f64) -> SteadyStateCC {
        let (alpha, q) = self.unpack(u);
        SteadyStateCC { alpha, q, detunings: self.detunings(q), couplings: self.g, residual }
    }
}

/// Solves the CC steady state for given inputs, starting from the g = 0 linear solve.
///
/// When `check_bistability` is set, Newton is restarted from rescaled amplitudes
/// and any distinct converged root is reported as a bistability error.
pub fn cc_steady_state_from_inputs(params: &SystemParams, inputs: &[f64], check_bistability: bool) -> Result<SteadyStateCC> {
    let prob = CcProblem::new(params, inputs)?;
    if prob.eps == 0.0 {
        let zero = [Complex::new(0.0, 0.0); 3];
        return Ok(SteadyStateCC { alpha: zero, q: [0.0, 0.0], detunings: prob.detunings([0.0, 0.0]), couplings: prob.g, residual: 0.0 });
    }
    let a0 = prob.linear_amplitudes([0.0, 0.0])?;
    let (u, res) = prob.newton(prob.pack(&a0, [0.0, 0.0]))?;
    let state = prob.state(&u, res);
    if check_bistability {
        let total = |s: &SteadyStateCC| s.photon_numbers().iter().sum::<f64>();
        let mut roots = vec![total(&state)];
        for factor in [0.1, 3.0, 10.0] {
            let scaled = a0.map(|a| a * factor);
            let n = scaled.map(|a| a.norm_sqr());
            let q = [prob.compliance * prob.g[0] * (n[1] - n[0]), prob.compliance * prob.g[1] * (n[2] - n[1])];
            let Ok(start) = prob.linear_amplitudes(q) else { continue };
            if let Ok((v, vres)) = prob.newton(prob.pack(&start, q)) {
                let t = total(&prob.state(&v, vres));
                if roots.iter().all(|&r| (t - r).abs() > 1e-6 * r.abs().max(t.abs())) {
                    roots.push(t);
                }
            }
        }
        if roots.len() > 1 {
            roots.sort_by(|x, y| x.total_cmp(y));
            return Err(Error::Bistable { roots });
        }
    }
    Ok(state)
}

/// Steady state at a disorder, with a bistability check.
pub fn solve_steady_state_cc(params: &SystemParams, disorder: &Disorder) -> Result<SteadyStateCC> {
    params.validate()?;
    disorder.validate(params.disorder_bound)?;
    let inputs = cc_inputs(params, disorder)?;
    cc_steady_state_from_inputs(params, &inputs, true)
}

/// Dimensionless (A, D) for the ordering (X₁, Y₁, X₂, Y₂, X₃, Y₃, p₁, p₂, q₁, q₂).
pub fn cc_linear_system(params: &SystemParams, state: &SteadyStateCC) -> LinearSystem {
    let w = params.mech_freq;
    let units = params.units();
    let k = params.cavity_decays;
    let mut a = DMatrix::zeros(10, 10);
    for j in 0..3 {
        a[(2 * j, 2 * j)] = -0.5 * k[j] / w;
        a[(2 * j + 1, 2 * j + 1)] = -0.5 * k[j] / w;
        a[(2 * j, 2 * j + 1)] = state.detunings[j] / w;
        a[(2 * j + 1, 2 * j)] = -state.detunings[j] / w;
    }
    let jj = params.hopping / w;
    for j in 0..2 {
        // X_j ← +J Y_{j+1}, Y_j ← −J X_{j+1}, and symmetrically.
        a[(2 * j, 2 * j + 3)] = jj;
        a[(2 * j + 1, 2 * j + 2)] = -jj;
        a[(2 * j + 2, 2 * j + 1)] = jj;
        a[(2 * j + 3, 2 * j)] = -jj;
    }
    let [g1, g2] = state.couplings;
    let [a1, a2, a3] = state.alpha;
    let cf = SQRT_2 * units.x_zpf / w;
    a[(0, 8)] = g1 * a1.im * cf;
    a[(1, 8)] = -g1 * a1.re * cf;
    a[(2, 8)] = -g1 * a2.im * cf;
    a[(2, 9)] = g2 * a2.im * cf;
    a[(3, 8)] = g1 * a2.re * cf;
    a[(3, 9)] = -g2 * a2.re * cf;
    a[(4, 9)] = -g2 * a3.im * cf;
    a[(5, 9)] = g2 * a3.re * cf;
    let cp = SQRT_2 * HBAR / (units.p_zpf * w);
    a[(6, 0)] = -g1 * a1.re * cp;
    a[(6, 1)] = -g1 * a1.im * cp;
    a[(6, 2)] = g1 * a2.re * cp;
    a[(6, 3)] = g1 * a2.im * cp;
    a[(7, 2)] = -g2 * a2.re * cp;
    a[(7, 3)] = -g2 * a2.im * cp;
    a[(7, 4)] = g2 * a3.re * cp;
    a[(7, 5)] = g2 * a3.im * cp;
    let gamma = params.mech_damping / w;
    a[(6, 6)] = -gamma;
    a[(7, 7)] = -gamma;
    a[(6, 8)] = -1.0;
    a[(7, 9)] = -1.0;
    a[(8, 6)] = 1.0;
    a[(9, 7)] = 1.0;

    let mut d = DMatrix::zeros(10, 10);
    for j in 0..3 {
        d[(2 * j, 2 * j)] = 0.5 * k[j] / w;
        d[(2 * j + 1, 2 * j + 1)] = 0.5 * k[j] / w;
    }
    let thermal = thermal_diffusion(params);
    d[(6, 6)] = thermal;
    d[(7, 7)] = thermal;
    LinearSystem { model: Model::CoupledCavities, a, d }
}
