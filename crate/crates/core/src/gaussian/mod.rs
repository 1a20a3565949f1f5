//! Stationary Gaussian statistics: Lyapunov solves, disorder derivatives of the
//! covariance, and the filtered output mode.

pub mod derivatives;
pub mod lyapunov;
pub mod output;
pub mod stationary;
pub mod wigner;

use nalgebra::DMatrix;

use crate::physics::Model;

pub use derivatives::{covariance_derivatives, covariance_derivatives_with, CovarianceDerivatives};
pub use lyapunov::{lyapunov_residual, solve_lyapunov, Covariance, LyapunovSolver, ILL_CONDITIONED};
pub use output::{filter_prefactor, output_block, output_covariance, output_derivative, OutputCovariance};
pub use stationary::{stationary_covariance, StationaryState, RESIDUAL_TOL};
pub use wigner::wigner_at;

/// Tolerance on the smallest eigenvalue of σ + (i/2)Ω.
pub const PHYSICALITY_TOL: f64 = 1e-10;

/// Commutator matrix Ω_jk = −i⟨[R_j, R_k]⟩ for the model ordering.
///
/// Optical quadratures obey [X, Y] = i. Mechanical coordinates are in zero-point
/// units, where [q̃, p̃] = 2i.
pub fn symplectic_form(model: Model) -> DMatrix<f64> {
    let nopt = model.optical_dim();
    let n = model.dim();
    let mut w = DMatrix::zeros(n, n);
    for j in (0..nopt).step_by(2) {
        w[(j, j + 1)] = 1.0;
        w[(j + 1, j)] = -1.0;
    }
    // Mechanical block ordered (p1, p2, q1, q2).
    for j in 0..2 {
        let p = nopt + j;
        let q = nopt + 2 + j;
        w[(q, p)] = 2.0;
        w[(p, q)] = -2.0;
    }
    w
}

/// Smallest eigenvalue of the Hermitian matrix σ + (i/2)Ω, computed through its
/// real symmetric embedding [[σ, −Ω/2], [Ω/2, σ]].
pub fn physicality_margin(sigma: &DMatrix<f64>, model: Model) -> f64 {
    let n = sigma.nrows();
    let w = symplectic_form(model) * 0.5;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(sigma);
    m.view_mut((n, n), (n, n)).copy_from(sigma);
    m.view_mut((0, n), (n, n)).copy_from(&(-&w));
    m.view_mut((n, 0), (n, n)).copy_from(&w);
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigenvalues().min()
}
