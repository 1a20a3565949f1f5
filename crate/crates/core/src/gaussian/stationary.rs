//! Stationary covariance of a linearized model, solved for the excess over an
//! uncoupled reference state in balanced coordinates.

use nalgebra::{DMatrix, DVector};

use super::lyapunov::{LyapunovSolver, ILL_CONDITIONED};
use super::physicality_margin;
use crate::error::{Error, Result};
use crate::models::{check_stability, LinearSystem};
use crate::physics::Model;

/// Largest accepted ‖Aσ + σAᵀ + D‖_F / ‖D‖_F.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// σ = V + X, with V the optical vacuum plus the thermal state of each bare
/// mechanical oscillator.
#[derive(Clone, Debug)]
pub struct StationaryState {
    pub model: Model,
    pub sigma: DMatrix<f64>,
    /// V: uncoupled reference state.
    pub reference: DMatrix<f64>,
    /// X: everything beyond the reference state.
    pub excess: DMatrix<f64>,
    pub residual: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
    /// Smallest eigenvalue of σ + (i/2)Ω.
    pub physicality_margin: f64,
    pub max_real: f64,
    balance: DVector<f64>,
    balanced_solver: LyapunovSolver,
}

/// Optical vacuum plus, for each mechanical mode whose (p, q) rotation is
/// antisymmetric, the variance D_pp / (−2 A_pp) that balances its own damping.
fn reference_state(sys: &LinearSystem) -> DMatrix<f64> {
    let nopt = sys.model.optical_dim();
    let n = sys.dim();
    let mut v = DMatrix::zeros(n, n);
    for i in 0..nopt {
        v[(i, i)] = 0.5;
    }
    for j in 0..2 {
        let (p, q) = (nopt + j, nopt + 2 + j);
        let (a, d) = (&sys.a, &sys.d);
        if a[(p, p)] < 0.0 && a[(p, q)] == -a[(q, p)] && a[(q, q)] == 0.0 {
            let c = d[(p, p)] / (-2.0 * a[(p, p)]);
            v[(p, p)] = c;
            v[(q, q)] = c;
        }
    }
    v
}

/// B⁻¹ M B⁻¹ for diagonal B.
fn congruence_inv(m: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (b[i] * b[j]))
}

/// B M B for diagonal B.
fn congruence(m: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * b[i] * b[j])
}

/// B⁻¹ A B for diagonal B.
fn similarity(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * b[j] / b[i])
}

/// Stationary covariance of a stable linear system.
///
/// The excess X solves A X + X Aᵀ = −(A V + V Aᵀ + D). Its mechanical block is
/// far larger than the optical one, so the solve is repeated after rescaling the
/// mechanical coordinates to equalize the two blocks. The residual is evaluated
/// as (A V + V Aᵀ + D) + A X + X Aᵀ, which avoids cancelling the large thermal
/// variances against each other. A few refinement steps follow the solve.
pub fn stationary_covariance(sys: &LinearSystem) -> Result<StationaryState> {
    let max_real = check_stability(&sys.a)?.into_result()?;
    if (&sys.d - sys.d.transpose()).amax() > 1e-12 * sys.d.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::Domain("diffusion matrix is not symmetric".into()));
    }
    let n = sys.dim();
    let nopt = sys.model.optical_dim();
    let v = reference_state(sys);
    let rhs = &sys.a * &v + &v * sys.a.transpose() + &sys.d;

    let mut balance = DVector::from_element(n, 1.0);
    let mut solver = LyapunovSolver::new(&sys.a)?;
    let mut x = solver.solve(&rhs)?;
    for _ in 0..2 {
        let oo = x.view((0, 0), (nopt, nopt)).amax();
        let mm = x.view((nopt, nopt), (n - nopt, n - nopt)).amax();
        let b = if oo > 0.0 && mm > 0.0 { (mm / oo).sqrt() } else { 1.0 };
        // Compose with the current scaling: X = B X_b B.
        let step = b / balance[nopt];
        if step == 1.0 {
            break;
        }
        for i in nopt..n {
            balance[i] = b;
        }
        solver = LyapunovSolver::new(&similarity(&sys.a, &balance))?;
        x = congruence(&solver.solve(&congruence_inv(&rhs, &balance))?, &balance);
    }
    let dn = sys.d.norm();
    let relative = |r: &DMatrix<f64>| if dn == 0.0 { r.norm() } else { r.norm() / dn };
    let residual_of = |x: &DMatrix<f64>| &rhs + &sys.a * x + x * sys.a.transpose();
    let mut x = (&x + x.transpose()) * 0.5;
    let mut residual = relative(&residual_of(&x));
    // Iterative refinement against the same factorization.
    for _ in 0..3 {
        if residual < 1e-3 * RESIDUAL_TOL {
            break;
        }
        let dx = congruence(&solver.solve(&congruence_inv(&residual_of(&x), &balance))?, &balance);
        let next = &x + (&dx + dx.transpose()) * 0.5;
        let next_residual = relative(&residual_of(&next));
        if !(next_residual < residual) {
            break;
        }
        (x, residual) = (next, next_residual);
    }
    let sigma = &v + &x;
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::Solver { what: "Lyapunov residual above tolerance".into(), residual });
    }
    let condition = solver.condition();
    Ok(StationaryState {
        model: sys.model,
        reference: v,
        physicality_margin: physicality_margin(&sigma, sys.model),
        sigma,
        excess: x,
        residual,
        condition,
        ill_conditioned: condition > ILL_CONDITIONED,
        max_real,
        balance,
        balanced_solver: solver,
    })
}

impl StationaryState {
    /// Solves A ∂σ + ∂σ Aᵀ = −(∂A σ + σ ∂Aᵀ) in the balanced coordinates of the
    /// stationary solve.
    pub fn derivative(&self, da: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let rhs = da * &self.sigma + &self.sigma * da.transpose();
        let d = congruence(&self.balanced_solver.solve(&congruence_inv(&rhs, &self.balance))?, &self.balance);
        Ok((&d + d.transpose()) * 0.5)
    }

    pub fn is_physical(&self) -> bool {
        self.physicality_margin >= -super::PHYSICALITY_TOL
    }
}
