//! Maximum-likelihood estimation of the disorder from homodyne statistics.
//!
//! Under the Gaussian outcome law the sample enters only through T = Σk², so a
//! data set is summarized by (setting, N, T). One setting constrains a single
//! combination of the disorders and yields a curve of solutions. Several
//! settings with independent sensitivities fix a point.

use argmin::core::{CostFunction, Executor, Gradient, Hessian, State};
use argmin::solver::trustregion::{Steihaug, TrustRegion};
use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::Serialize;

use super::fisher::{lo_direction, pinv_sym, sensitivities};
use super::homodyne::{homodyne_rate, sufficient_statistic, Setting};
use crate::error::{Error, Result};
use crate::physics::Disorder;

/// Forward model from disorder (m) to the detected output covariance.
pub trait ForwardModel: Sync {
    fn output_covariance(&self, filter_freq: f64, disorder: &Disorder) -> Result<Matrix2<f64>>;

    /// Output covariance and its derivatives with respect to δq₁, δq₂ in 1/m.
    fn output_with_derivatives(&self, filter_freq: f64, disorder: &Disorder) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])>;
}

/// One homodyne data set reduced to its sufficient statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SettingData {
    pub setting: Setting,
    pub n: usize,
    /// T = Σk².
    pub statistic: f64,
}

impl SettingData {
    pub fn from_sample(setting: Setting, k: &[f64]) -> Result<Self> {
        Ok(SettingData { setting, n: k.len(), statistic: sufficient_statistic(k)? })
    }

    /// Quadrature variance R_θᵀσR_θ at which the likelihood is stationary:
    /// 2T/N − (1 − η)/(2η).
    pub fn target_variance(&self) -> f64 {
        let eta = self.setting.eta;
        2.0 * self.statistic / self.n as f64 - (1.0 - eta) / (2.0 * eta)
    }

    /// Log-likelihood N/2·ln r − rT/2, dropping the constant −N/2·ln 2π.
    fn log_likelihood(&self, sigma: &Matrix2<f64>) -> Result<f64> {
        let r = lo_direction(self.setting.theta);
        let rate = homodyne_rate(r.dot(&(sigma * r)), self.setting.eta)?;
        Ok(0.5 * self.n as f64 * rate.ln() - 0.5 * rate * self.statistic)
    }
}

/// Roots in δq₂ at one δq₁ grid point. An empty list marks a point with no root
/// inside the δq₂ range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionPoint {
    pub dq1: f64,
    pub roots: Vec<f64>,
}

/// Solution set of the single-setting likelihood equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionSet {
    pub target_variance: f64,
    pub points: Vec<SolutionPoint>,
    /// δq₁ positions of solution lines along which the variance does not depend
    /// on δq₂ at all.
    pub vertical_lines: Vec<f64>,
    /// Range of R_θᵀσR_θ over the scanned grid.
    pub variance_range: [f64; 2],
    /// Set when the target lies outside the scanned variance range.
    pub diagnostic: Option<String>,
}

impl SolutionSet {
    /// All (δq₁, δq₂) solution pairs found on the grid.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points.iter().flat_map(|p| p.roots.iter().map(move |&r| (p.dq1, r))).collect()
    }
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sign-change roots of the sampled function on a grid, refined by bisection.
fn grid_roots<F: Fn(f64) -> Result<f64>>(f: &F, grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    for w in 0..grid.len().saturating_sub(1) {
        let (a, b) = (values[w], values[w + 1]);
        if a == 0.0 {
            roots.push(grid[w]);
        } else if b != 0.0 && (a > 0.0) != (b > 0.0) {
            roots.push(bisect(f, grid[w], grid[w + 1], a)?);
        }
    }
    if let (Some(&last), Some(&x)) = (values.last(), grid.last()) {
        if last == 0.0 {
            roots.push(x);
        }
    }
    Ok(roots)
}

/// Solves R_θᵀ σ(δq₁, δq₂) R_θ = 2T/N − (1 − η)/(2η) for δq₂ at each δq₁ of
/// `dq1_grid`, bracketing on `dq2_grid` (both in m, increasing).
pub fn mle_solution_set(data: &SettingData, model: &dyn ForwardModel, dq1_grid: &[f64], dq2_grid: &[f64]) -> Result<SolutionSet> {
    if dq1_grid.is_empty() || dq2_grid.len() < 2 {
        return Err(Error::Param { name: "grid", reason: "need at least one δq₁ and two δq₂ points".into() });
    }
    let target = data.target_variance();
    let r = lo_direction(data.setting.theta);
    let om = data.setting.filter_freq;
    let variance = |d1: f64, d2: f64| -> Result<f64> {
        let s = model.output_covariance(om, &Disorder::new(d1, d2))?;
        Ok(r.dot(&(s * r)))
    };
    let mut points = Vec::with_capacity(dq1_grid.len());
    let mut flat_rows = Vec::new();
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &d1 in dq1_grid {
        let g = |d2: f64| variance(d1, d2).map(|v| v - target);
        let values = dq2_grid.iter().map(|&d2| g(d2)).collect::<Result<Vec<_>>>()?;
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        vmin = vmin.min(lo + target);
        vmax = vmax.max(hi + target);
        let flat = hi - lo <= 4.0 * f64::EPSILON * (target.abs() + hi.abs());
        let roots = if flat { Vec::new() } else { grid_roots(&g, dq2_grid, &values)? };
        if flat {
            flat_rows.push((d1, values[0]));
        }
        points.push(SolutionPoint { dq1: d1, roots });
    }
    // Rows independent of δq₂: locate sign changes along δq₁ instead.
    let mut vertical_lines = Vec::new();
    if flat_rows.len() >= 2 {
        let grid: Vec<f64> = flat_rows.iter().map(|p| p.0).collect();
        let vals: Vec<f64> = flat_rows.iter().map(|p| p.1).collect();
        let d2 = dq2_grid[0];
        vertical_lines = grid_roots(&|d1: f64| variance(d1, d2).map(|v| v - target), &grid, &vals)?;
    }
    let diagnostic = if target < vmin {
        Some(format!("target variance {target:.6e} is below the minimum {vmin:.6e} over the grid; no solution"))
    } else if target > vmax {
        Some(format!("target variance {target:.6e} is above the maximum {vmax:.6e} over the grid; no solution"))
    } else {
        None
    };
    Ok(SolutionSet { target_variance: target, points, vertical_lines, variance_range: [vmin, vmax], diagnostic })
}

/// Options for the multi-setting estimator.
#[derive(Clone, Copy, Debug)]
pub struct MleOptions {
    /// Point at which the joint Fisher information fixes the search scale.
    pub reference: Disorder,
    /// Half-width of the outermost start grid in standard deviations.
    pub grid_half_width: f64,
    pub grid_points: usize,
    /// Number of nested start grids, each ten times narrower than the last.
    pub grid_levels: usize,
    pub max_iters: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { reference: Disorder::ZERO, grid_half_width: 6.0, grid_points: 13, grid_levels: 5, max_iters: 200 }
    }
}

/// Observed versus fitted Σk²/N for one setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SettingResidual {
    pub setting: Setting,
    pub observed: f64,
    pub predicted: f64,
    /// Standard error of Σk²/N under the fitted law, √2/(r√N).
    pub standard_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MleEstimate {
    pub estimate: Disorder,
    pub log_likelihood: f64,
    /// ∂²ℓ/∂δq² at the estimate (1/m²).
    pub hessian: [[f64; 2]; 2],
    pub hessian_negative_definite: bool,
    /// √(gᵀ M⁻¹ g) at the estimate, with g the score and M the Hessian if it is
    /// positive definite, otherwise the expected information.
    pub newton_decrement: f64,
    /// The search ended on a flat ridge where further steps no longer change
    /// the log-likelihood, rather than at a small decrement.
    pub stalled: bool,
    /// Joint Fisher information of all data at the reference point (1/m²).
    pub joint_fisher: [[f64; 2]; 2],
    /// Its inverse, the Cramér–Rao covariance bound (m²).
    pub covariance_bound: [[f64; 2]; 2],
    pub start: Disorder,
    pub iterations: u64,
    pub residuals: Vec<SettingResidual>,
}

/// Largest accepted Newton decrement at the returned estimate.
pub const DECREMENT_TOL: f64 = 0.05;
/// Log-likelihood gain per optimizer run below which the search has stalled.
pub const STALL_TOL: f64 = 1e-3;

fn to_array(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Negative log-likelihood in whitened coordinates z, δq = reference + W z.
struct Objective<'a> {
    data: &'a [SettingData],
    model: &'a dyn ForwardModel,
    /// Distinct filter frequencies and, per data set, its index among them.
    freqs: Vec<f64>,
    freq_index: Vec<usize>,
    reference: Vector2<f64>,
    whitening: Matrix2<f64>,
}

impl Objective<'_> {
    fn disorder(&self, z: &[f64]) -> Disorder {
        let d = self.reference + self.whitening * Vector2::new(z[0], z[1]);
        Disorder::new(d[0], d[1])
    }

    fn log_likelihood_at(&self, d: &Disorder) -> Result<f64> {
        let sigmas = self.freqs.iter().map(|&om| self.model.output_covariance(om, d)).collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for (data, &i) in self.data.iter().zip(&self.freq_index) {
            total += data.log_likelihood(&sigmas[i])?;
        }
        Ok(total)
    }

    fn nll(&self, z: &[f64]) -> Result<f64> {
        self.log_likelihood_at(&self.disorder(z)).map(|l| -l)
    }

    /// Gradient of the negative log-likelihood in z from the model's ∂σ, and
    /// the expected information Wᵀ(Σ N_s F_s)W at the same point.
    ///
    /// With ℓ = N/2·ln r − rT/2 and ∂r/∂V = −r²/2, ∂ℓ/∂δqᵢ = (N/(2r) − T/2)(−r²/2) vᵢ,
    /// and one outcome carries information r² v vᵀ/8.
    fn score(&self, z: &[f64]) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        let d = self.disorder(z);
        let evals = self.freqs.iter().map(|&om| self.model.output_with_derivatives(om, &d)).collect::<Result<Vec<_>>>()?;
        let mut g = Vector2::zeros();
        let mut info = Matrix2::zeros();
        for (data, &i) in self.data.iter().zip(&self.freq_index) {
            let (sigma, ds) = &evals[i];
            let r = lo_direction(data.setting.theta);
            let rate = homodyne_rate(r.dot(&(sigma * r)), data.setting.eta)?;
            let v = sensitivities(ds, data.setting.theta);
            g -= v * ((0.5 * data.n as f64 / rate - 0.5 * data.statistic) * (-0.5 * rate * rate));
            info += v * v.transpose() * (data.n as f64 * rate * rate / 8.0);
        }
        let w = &self.whitening;
        Ok((w.transpose() * g, w.transpose() * info * w))
    }

    fn gradient(&self, z: &[f64]) -> Result<Vector2<f64>> {
        Ok(self.score(z)?.0)
    }

    /// Hessian of the negative log-likelihood in z by central differences of
    /// the gradient.
    fn hessian(&self, z: &[f64]) -> Result<Matrix2<f64>> {
        let h = 1e-4;
        let mut m = Matrix2::zeros();
        for j in 0..2 {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[j] += h;
            zm[j] -= h;
            m.set_column(j, &((self.gradient(&zp)? - self.gradient(&zm)?) / (2.0 * h)));
        }
        Ok((m + m.transpose()) * 0.5)
    }
}

fn argmin_error(e: Error) -> argmin::core::Error {
    argmin::core::Error::msg(e.to_string())
}

/// Borrowing adapter handed to the optimizer.
struct Problem<'a, 'b>(&'a Objective<'b>);

impl CostFunction for Problem<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    /// Points where the model fails (unstable, unphysical) cost +∞, which the
    /// trust region rejects by shrinking.
    fn cost(&self, z: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.0.nll(z).unwrap_or(f64::INFINITY))
    }
}

impl Gradient for Problem<'_, '_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, z: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        self.0.gradient(z).map(|g| vec![g[0], g[1]]).map_err(argmin_error)
    }
}

impl Hessian for Problem<'_, '_> {
    type Param = Vec<f64>;
    type Hessian = Vec<Vec<f64>>;

    fn hessian(&self, z: &Self::Param) -> std::result::Result<Vec<Vec<f64>>, argmin::core::Error> {
        let h = self.0.hessian(z).map_err(argmin_error)?;
        Ok(vec![vec![h[(0, 0)], h[(0, 1)]], vec![h[(1, 0)], h[(1, 1)]]])
    }
}

/// Joint Fisher information Σ_s N_s F_s at a point, in 1/m², together with each
/// setting's sensitivity vector.
pub fn joint_fisher(data: &[SettingData], model: &dyn ForwardModel, at: &Disorder) -> Result<(Matrix2<f64>, Vec<Vector2<f64>>)> {
    let mut f = Matrix2::zeros();
    let mut vs = Vec::with_capacity(data.len());
    for d in data {
        let (sigma, ds) = model.output_with_derivatives(d.setting.filter_freq, at)?;
        let f1 = super::fisher::cfim(&sigma, &ds, d.setting.theta, d.setting.eta)?;
        f += f1 * d.n as f64;
        vs.push(sensitivities(&ds, d.setting.theta));
    }
    Ok((f, vs))
}

/// Joint maximum-likelihood estimate from two or more settings.
///
/// The search runs in coordinates whitened by the joint Fisher information at
/// the reference point. Nested grids around the reference supply the start,
/// and trust-region Newton steps with the analytic score refine it. The Hessian
/// check is reported, not enforced. The estimate is rejected only if the search
/// neither reaches a Newton decrement below `DECREMENT_TOL` nor stalls.
pub fn mle_multi_setting(data: &[SettingData], model: &dyn ForwardModel, opts: &MleOptions) -> Result<MleEstimate> {
    if data.len() < 2 {
        return Err(Error::Identifiability(format!(
            "{} setting(s) constrain only one combination of the two disorders; at least two settings are needed",
            data.len()
        )));
    }
    let (f_joint, vs) = joint_fisher(data, model, &opts.reference)?;
    let independent = (0..vs.len()).any(|a| {
        (a + 1..vs.len()).any(|b| {
            let det = vs[a][0] * vs[b][1] - vs[a][1] * vs[b][0];
            det.abs() > 1e-8 * vs[a].norm() * vs[b].norm()
        })
    });
    if !independent {
        return Err(Error::Identifiability("all settings have parallel sensitivity vectors".into()));
    }
    let e = SymmetricEigen::new(f_joint);
    if e.eigenvalues.min() <= 0.0 {
        return Err(Error::Identifiability("joint Fisher information is singular".into()));
    }
    let whitening = e.eigenvectors * Matrix2::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt())) * e.eigenvectors.transpose();

    let mut freqs: Vec<f64> = Vec::new();
    let freq_index = data
        .iter()
        .map(|d| match freqs.iter().position(|&f| f == d.setting.filter_freq) {
            Some(i) => i,
            None => {
                freqs.push(d.setting.filter_freq);
                freqs.len() - 1
            }
        })
        .collect();
    let obj = Objective {
        data,
        model,
        freqs,
        freq_index,
        reference: Vector2::new(opts.reference.dq1, opts.reference.dq2),
        whitening,
    };

    let m = opts.grid_points.max(2);
    let mut best = (f64::INFINITY, vec![0.0, 0.0]);
    let mut half = opts.grid_half_width;
    for _ in 0..opts.grid_levels.max(1) {
        for i in 0..m {
            for j in 0..m {
                let z = vec![-half + 2.0 * half * i as f64 / (m - 1) as f64, -half + 2.0 * half * j as f64 / (m - 1) as f64];
                // Points where the model is unstable or unphysical are skipped.
                if let Ok(c) = obj.nll(&z) {
                    if c < best.0 {
                        best = (c, z);
                    }
                }
            }
        }
        half *= 0.1;
    }
    if !best.0.is_finite() {
        return Err(Error::Solver { what: "likelihood undefined on the whole start grid".into(), residual: f64::NAN });
    }
    let start = obj.disorder(&best.1);

    // Trust-region Newton steps in short runs, since the solver has no stopping
    // rule of its own. Convergence is a small Newton decrement, measured with
    // the Hessian where it is positive definite and the expected information
    // elsewhere, or a run that no longer changes the log-likelihood.
    let decrement = |z: &[f64]| -> Result<(f64, Matrix2<f64>)> {
        let (g, info) = obj.score(z)?;
        let h = obj.hessian(z)?;
        let metric = if SymmetricEigen::new(h).eigenvalues.min() > 0.0 { h } else { info };
        let dec = match metric.try_inverse() {
            Some(inv) => g.dot(&(inv * g)).max(0.0).sqrt(),
            None => f64::INFINITY,
        };
        Ok((dec, h))
    };
    let mut z = best.1.clone();
    let mut cost = best.0;
    let mut radius = 1.0;
    let mut iterations = 0;
    let mut stalled = false;
    let (mut newton_decrement, mut hz) = decrement(&z)?;
    while iterations < opts.max_iters && newton_decrement >= 1e-3 * DECREMENT_TOL {
        let chunk = (opts.max_iters - iterations).min(5);
        let solver = TrustRegion::new(Steihaug::new().with_max_iters(20))
            .with_radius(radius)
            .and_then(|s| s.with_max_radius(1e3))
            .map_err(|e| Error::Solver { what: e.to_string(), residual: f64::NAN })?;
        let Ok(res) = Executor::new(Problem(&obj), solver).configure(|st| st.param(z.clone()).max_iters(chunk)).run() else {
            break;
        };
        let st = res.state();
        iterations += st.get_iter();
        let Some(next) = st.get_best_param().cloned() else { break };
        let next_cost = st.get_best_cost();
        if !(next_cost < cost) {
            // Every step of the run was rejected; each rejection quarters the radius.
            radius *= 0.25f64.powi(chunk as i32);
            if radius < 1e-9 {
                stalled = true;
                break;
            }
            continue;
        }
        let step = ((next[0] - z[0]).powi(2) + (next[1] - z[1]).powi(2)).sqrt();
        radius = (2.0 * step).clamp(1e-9, 1e3);
        let gain = cost - next_cost;
        (z, cost) = (next, next_cost);
        (newton_decrement, hz) = decrement(&z)?;
        if gain < STALL_TOL {
            stalled = true;
            break;
        }
    }
    let hessian_negative_definite = SymmetricEigen::new(hz).eigenvalues.min() > 0.0;
    if !(newton_decrement < DECREMENT_TOL || stalled) {
        return Err(Error::Solver {
            what: format!("optimizer stopped after {iterations} iterations at z = ({:.4e}, {:.4e})", z[0], z[1]),
            residual: newton_decrement,
        });
    }
    let estimate = obj.disorder(&z);
    // ∂²ℓ/∂δq² = −W⁻ᵀ (∂²(−ℓ)/∂z²) W⁻¹.
    let winv = whitening.try_inverse().expect("whitening of a positive definite matrix");
    let hessian = -(winv.transpose() * hz * winv);

    let sigmas = obj.freqs.iter().map(|&om| model.output_covariance(om, &estimate)).collect::<Result<Vec<_>>>()?;
    let residuals = data
        .iter()
        .zip(&obj.freq_index)
        .map(|(d, &i)| {
            let r = lo_direction(d.setting.theta);
            let rate = homodyne_rate(r.dot(&(sigmas[i] * r)), d.setting.eta)?;
            Ok(SettingResidual {
                setting: d.setting,
                observed: d.statistic / d.n as f64,
                predicted: 1.0 / rate,
                standard_error: 2f64.sqrt() / (rate * (d.n as f64).sqrt()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (cov, _) = pinv_sym(&f_joint);
    Ok(MleEstimate {
        estimate,
        log_likelihood: obj.log_likelihood_at(&estimate)?,
        hessian: to_array(&hessian),
        hessian_negative_definite,
        newton_decrement,
        stalled,
        joint_fisher: to_array(&f_joint),
        covariance_bound: to_array(&cov),
        start,
        iterations,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Output variance linear in the disorder along a phase-dependent direction.
    struct Linear;

    impl ForwardModel for Linear {
        fn output_covariance(&self, om: f64, d: &Disorder) -> Result<Matrix2<f64>> {
            Ok(self.output_with_derivatives(om, d)?.0)
        }

        fn output_with_derivatives(&self, om: f64, d: &Disorder) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])> {
            let a = Matrix2::new(1e3, 0.0, 0.0, 0.0);
            let b = Matrix2::new(0.0, 0.0, 0.0, 1e3);
            let c = Matrix2::new(0.0, 1e3, 1e3, 0.0) * om;
            let s = Matrix2::identity() * 0.6 + a * d.dq1 + b * d.dq2 + c * (d.dq1 + d.dq2);
            Ok((s, [a + c, b + c]))
        }
    }

    /// Output independent of δq₂.
    struct OnlyFirst;

    impl ForwardModel for OnlyFirst {
        fn output_covariance(&self, _: f64, d: &Disorder) -> Result<Matrix2<f64>> {
            Ok(Matrix2::identity() * (0.6 + 1e3 * d.dq1))
        }

        fn output_with_derivatives(&self, om: f64, d: &Disorder) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])> {
            Ok((self.output_covariance(om, d)?, [Matrix2::identity() * 1e3, Matrix2::zeros()]))
        }
    }

    fn exact_data(model: &dyn ForwardModel, setting: Setting, n: usize, at: &Disorder) -> SettingData {
        let s = model.output_covariance(setting.filter_freq, at).unwrap();
        let r = lo_direction(setting.theta);
        let rate = homodyne_rate(r.dot(&(s * r)), setting.eta).unwrap();
        SettingData { setting, n, statistic: n as f64 / rate }
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_statistic_recovers_truth() {
        let truth = Disorder::new(1e-5, -2e-5);
        let data = [
            exact_data(&Linear, Setting { theta: 0.0, eta: 1.0, filter_freq: 0.0 }, 100_000, &truth),
            exact_data(&Linear, Setting { theta: 1.2, eta: 0.8, filter_freq: 0.5 }, 100_000, &truth),
        ];
        let est = mle_multi_setting(&data, &Linear, &MleOptions::default()).unwrap();
        let sd = est.covariance_bound[0][0].sqrt();
        assert!((est.estimate.dq1 - truth.dq1).abs() < 1e-3 * sd, "{:?}", est.estimate);
        assert!((est.estimate.dq2 - truth.dq2).abs() < 1e-3 * est.covariance_bound[1][1].sqrt());
        assert!(est.hessian_negative_definite);
        for r in &est.residuals {
            assert!((r.observed - r.predicted).abs() < 1e-6 * r.standard_error);
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        let data = [
            exact_data(&Linear, Setting { theta: 0.0, eta: 1.0, filter_freq: 0.0 }, 1000, &Disorder::new(1e-5, 0.0)),
            exact_data(&Linear, Setting { theta: 1.2, eta: 0.8, filter_freq: 0.5 }, 1000, &Disorder::ZERO),
        ];
        let obj = Objective {
            data: &data,
            model: &Linear,
            freqs: vec![0.0, 0.5],
            freq_index: vec![0, 1],
            reference: Vector2::new(2e-5, -1e-5),
            whitening: Matrix2::new(3e-5, 1e-6, 1e-6, 2e-5),
        };
        let z = [0.3, -0.2];
        let g = obj.gradient(&z).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[i] += h;
            zm[i] -= h;
            let fd = (obj.nll(&zp).unwrap() - obj.nll(&zm).unwrap()) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-6 * fd.abs().max(1.0), "{i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn single_setting_is_not_identifiable() {
        let d = exact_data(&Linear, Setting { theta: 0.0, eta: 1.0, filter_freq: 0.0 }, 10, &Disorder::ZERO);
        assert!(matches!(mle_multi_setting(&[d], &Linear, &MleOptions::default()), Err(Error::Identifiability(_))));
    }

    #[test]
    fn parallel_sensitivities_are_not_identifiable() {
        let s = Setting { theta: 0.0, eta: 1.0, filter_freq: 0.0 };
        let d = exact_data(&OnlyFirst, s, 10, &Disorder::ZERO);
        let d2 = exact_data(&OnlyFirst, Setting { theta: 0.7, ..s }, 10, &Disorder::ZERO);
        assert!(matches!(mle_multi_setting(&[d, d2], &OnlyFirst, &MleOptions::default()), Err(Error::Identifiability(_))));
    }

    #[test]
    fn solution_curve_contains_truth() {
        let truth = Disorder::new(1e-5, -2e-5);
        let d = exact_data(&Linear, Setting { theta: 0.4, eta: 1.0, filter_freq: 0.5 }, 1000, &truth);
        let set = mle_solution_set(&d, &Linear, &[truth.dq1], &grid(-1e-4, 1e-4, 21)).unwrap();
        assert_eq!(set.points[0].roots.len(), 1);
        assert!((set.points[0].roots[0] - truth.dq2).abs() < 1e-12);
        assert!(set.diagnostic.is_none());
    }

    #[test]
    fn degenerate_model_gives_vertical_lines() {
        let truth = Disorder::new(2.5e-5, 0.0);
        let d = exact_data(&OnlyFirst, Setting { theta: 0.3, eta: 1.0, filter_freq: 0.0 }, 1000, &truth);
        let set = mle_solution_set(&d, &OnlyFirst, &grid(-1e-4, 1e-4, 9), &grid(-1e-4, 1e-4, 5)).unwrap();
        assert!(set.points.iter().all(|p| p.roots.is_empty()));
        assert_eq!(set.vertical_lines.len(), 1);
        assert!((set.vertical_lines[0] - truth.dq1).abs() < 1e-15);
    }

    #[test]
    fn infeasible_statistic_is_diagnosed() {
        let setting = Setting { theta: 0.0, eta: 1.0, filter_freq: 0.0 };
        let d = SettingData { setting, n: 100, statistic: 0.0 };
        let set = mle_solution_set(&d, &Linear, &grid(-1e-5, 1e-5, 3), &grid(-1e-5, 1e-5, 3)).unwrap();
        assert!(set.pairs().is_empty());
        assert!(set.diagnostic.unwrap().contains("below"));
    }
}
