//! Bartels–Stewart solver for A X + X Aᵀ = −C.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::check_stability;

/// Condition estimates above this attach a warning to the solution.
pub const ILL_CONDITIONED: f64 = 1e14;

/// Real Schur factorization of A, reusable for several right-hand sides.
#[derive(Clone, Debug)]
pub struct LyapunovSolver {
    q: DMatrix<f64>,
    t: DMatrix<f64>,
    /// Diagonal blocks of T as half-open index ranges, in ascending order.
    blocks: Vec<(usize, usize)>,
    condition: f64,
}

impl LyapunovSolver {
    /// Factorizes A = Q T Qᵀ. Chains of nonzero subdiagonal entries are merged
    /// into one diagonal block, so T needs no standardization.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Shape { expected: "square matrix".into(), got: format!("{}x{}", n, a.ncols()) });
        }
        let schur = a
            .clone()
            .try_schur(f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Solver { what: "real Schur decomposition did not converge".into(), residual: f64::NAN })?;
        let (q, t) = schur.unpack();
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && t[(end, end - 1)] != 0.0 {
                end += 1;
            }
            blocks.push((start, end));
            start = end;
        }
        let mut solver = LyapunovSolver { q, t, blocks, condition: 0.0 };
        solver.condition = solver.estimate_condition(a.norm());
        Ok(solver)
    }

    /// Rough condition number ‖A‖·2/sep, with sep the smallest singular value over
    /// all block-pair Kronecker operators.
    fn estimate_condition(&self, a_norm: f64) -> f64 {
        let mut sep = f64::INFINITY;
        for &bi in &self.blocks {
            for &bj in &self.blocks {
                let k = self.kronecker(bi, bj);
                let s = k.singular_values();
                sep = sep.min(s.min());
            }
        }
        if sep == 0.0 { f64::INFINITY } else { 2.0 * a_norm / sep }
    }

    /// Estimated condition number of the Lyapunov operator.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    fn kronecker(&self, (i0, i1): (usize, usize), (j0, j1): (usize, usize)) -> DMatrix<f64> {
        let p = i1 - i0;
        let q = j1 - j0;
        DMatrix::from_fn(p * q, p * q, |r, c| {
            let (a, b) = (r % p, r / p);
            let (cc, d) = (c % p, c / p);
            let mut v = 0.0;
            if b == d {
                v += self.t[(i0 + a, i0 + cc)];
            }
            if a == cc {
                v += self.t[(j0 + b, j0 + d)];
            }
            v
        })
    }

    /// Solves A X + X Aᵀ = −C and returns X (symmetrized when C is symmetric).
    pub fn solve(&self, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.t.nrows();
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::Shape { expected: format!("{n}x{n}"), got: format!("{}x{}", c.nrows(), c.ncols()) });
        }
        let rhs = -(self.q.transpose() * c * &self.q);
        let mut y = DMatrix::<f64>::zeros(n, n);
        for &(j0, j1) in self.blocks.iter().rev() {
            for &(i0, i1) in self.blocks.iter().rev() {
                let p = i1 - i0;
                let q = j1 - j0;
                let mut r = rhs.view((i0, j0), (p, q)).into_owned();
                if i1 < n {
                    r -= self.t.view((i0, i1), (p, n - i1)) * y.view((i1, j0), (n - i1, q));
                }
                if j1 < n {
                    r -= y.view((i0, j1), (p, n - j1)) * self.t.view((j0, j1), (q, n - j1)).transpose();
                }
                let k = self.kronecker((i0, i1), (j0, j1));
                let vec_r = DVector::from_column_slice(r.as_slice());
                let sol = k.lu().solve(&vec_r).ok_or_else(|| Error::Solver {
                    what: "singular Sylvester block; A has eigenvalues summing to zero".into(),
                    residual: f64::NAN,
                })?;
                y.view_mut((i0, j0), (p, q)).copy_from_slice(sol.as_slice());
            }
        }
        let x = &self.q * y * self.q.transpose();
        if (c - c.transpose()).amax() <= 1e-14 * c.amax() {
            Ok((&x + x.transpose()) * 0.5)
        } else {
            Ok(x)
        }
    }
}

/// Stationary covariance with diagnostics.
#[derive(Clone, Debug)]
pub struct Covariance {
    pub sigma: DMatrix<f64>,
    /// ‖Aσ + σAᵀ + D‖_F / ‖D‖_F.
    pub residual: f64,
    pub condition: f64,
    /// Set when the condition estimate exceeds [`ILL_CONDITIONED`].
    pub ill_conditioned: bool,
}

/// Solves A σ + σ Aᵀ = −D for a stable A and symmetric D.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<Covariance> {
    check_stability(a)?.into_result()?;
    if (d - d.transpose()).amax() > 1e-12 * d.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::Domain("diffusion matrix is not symmetric".into()));
    }
    let solver = LyapunovSolver::new(a)?;
    let sigma = solver.solve(d)?;
    let residual = lyapunov_residual(a, &sigma, d);
    Ok(Covariance { sigma, residual, condition: solver.condition(), ill_conditioned: solver.condition() > ILL_CONDITIONED })
}

/// ‖Aσ + σAᵀ + D‖_F / ‖D‖_F (absolute when D = 0).
pub fn lyapunov_residual(a: &DMatrix<f64>, sigma: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let r = a * sigma + sigma * a.transpose() + d;
    let dn = d.norm();
    if dn == 0.0 { r.norm() } else { r.norm() / dn }
}
