//! Independent numerical oracles and random fixtures shared by the integration
//! tests and the acceptance run.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn uniform(rng: &mut ChaCha20Rng, a: f64, b: f64) -> f64 {
    Uniform::new(a, b).unwrap().sample(rng)
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (z * p1 - p0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` panels of `order` nodes.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for k in 0..order {
            out.push((c + 0.5 * h * x[k], 0.5 * h * w[k]));
        }
    }
    out
}

/// Random stable matrix: Gaussian entries shifted so the rightmost eigenvalue
/// has real part in [−1, −0.2].
pub fn random_stable(rng: &mut ChaCha20Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| normal(rng) / (n as f64).sqrt());
    let top = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let target = -uniform(rng, 0.2, 1.0);
    &m - DMatrix::identity(n, n) * (top - target)
}

/// Random positive semidefinite matrix B Bᵀ of rank ≤ `rank`.
pub fn random_psd(rng: &mut ChaCha20Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, rank, |_, _| normal(rng));
    &b * b.transpose()
}

/// ∫₀^∞ e^{At} D e^{Aᵀt} dt by composite Gauss–Legendre quadrature with matrix
/// exponentials, stopping when a panel contributes less than `tol`·‖σ‖.
pub fn lyapunov_quadrature(a: &DMatrix<f64>, d: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let h = 0.5 / a.norm().max(1e-3);
    let (x, w) = gauss_legendre(16);
    let node_exp: Vec<DMatrix<f64>> = x.iter().map(|&xi| (a * (0.5 * h * (xi + 1.0))).exp()).collect();
    let step = (a * h).exp();
    let mut start = DMatrix::identity(n, n);
    let mut sum = DMatrix::zeros(n, n);
    let mut quiet = 0;
    for _ in 0..2_000_000 {
        let mut panel = DMatrix::zeros(n, n);
        for k in 0..16 {
            let e = &start * &node_exp[k];
            panel += (&e * d * e.transpose()) * (0.5 * h * w[k]);
        }
        sum += &panel;
        if panel.norm() <= tol * sum.norm() {
            quiet += 1;
            if quiet >= 20 {
                break;
            }
        } else {
            quiet = 0;
        }
        start = &start * &step;
    }
    (&sum + sum.transpose()) * 0.5
}

/// Random physical single-mode covariance: rotated squeezed thermal state with
/// det σ ≥ ¼.
pub fn random_physical_sigma(rng: &mut ChaCha20Rng) -> Matrix2<f64> {
    let nu = uniform(rng, 1.0, 4.0);
    let r = uniform(rng, -1.0, 1.0);
    let phi = uniform(rng, 0.0, std::f64::consts::PI);
    let (s, c) = phi.sin_cos();
    let rot = Matrix2::new(c, -s, s, c);
    rot * Matrix2::new(0.5 * nu * r.exp(), 0.0, 0.0, 0.5 * nu * (-r).exp()) * rot.transpose()
}

pub fn random_symmetric2(rng: &mut ChaCha20Rng) -> Matrix2<f64> {
    let a = normal(rng);
    let b = normal(rng);
    let c = normal(rng);
    Matrix2::new(a, b, b, c)
}

pub fn gaussian_pdf2(sigma: &Matrix2<f64>, x: f64, y: f64) -> f64 {
    let inv = sigma.try_inverse().unwrap();
    let r = Vector2::new(x, y);
    (-0.5 * r.dot(&(inv * r))).exp() / (2.0 * std::f64::consts::PI * sigma.determinant().sqrt())
}

/// Tensor-product quadrature of f·W over a box of ±`width` standard deviations.
pub fn phase_space_integral<F: Fn(f64, f64) -> f64>(sigma: &Matrix2<f64>, width: f64, panels: usize, f: F) -> f64 {
    let sx = sigma[(0, 0)].sqrt() * width;
    let sy = sigma[(1, 1)].sqrt() * width;
    let rx = composite_rule(-sx, sx, panels, 12);
    let ry = composite_rule(-sy, sy, panels, 12);
    let inv = sigma.try_inverse().unwrap();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma.determinant().sqrt());
    let mut total = 0.0;
    for &(x, wx) in &rx {
        for &(y, wy) in &ry {
            let q = inv[(0, 0)] * x * x + 2.0 * inv[(0, 1)] * x * y + inv[(1, 1)] * y * y;
            total += wx * wy * norm * (-0.5 * q).exp() * f(x, y);
        }
    }
    total
}

/// Weyl symbol of ½{L_i, L_j} for quadratic SLD symbols, written out as the
/// polynomial in x, y, including the xy term −2(Φ₁₂ⁱνʲ + Φ₁₂ʲνⁱ)xy.
pub fn sld_product_symbol(fi: &Matrix2<f64>, fj: &Matrix2<f64>, ni: f64, nj: f64, x: f64, y: f64) -> f64 {
    let (a11, a12, a22) = (fi[(0, 0)], fi[(0, 1)], fi[(1, 1)]);
    let (b11, b12, b22) = (fj[(0, 0)], fj[(0, 1)], fj[(1, 1)]);
    a11 * b11 * x.powi(4)
        + 2.0 * (a11 * b12 + b11 * a12) * x.powi(3) * y
        + (a11 * b22 + b11 * a22 + 4.0 * a12 * b12) * x * x * y * y
        + 2.0 * (a22 * b12 + b22 * a12) * x * y.powi(3)
        + a22 * b22 * y.powi(4)
        - (a11 * nj + b11 * ni) * x * x
        - (a22 * nj + b22 * ni) * y * y
        - 2.0 * (a12 * nj + b12 * ni) * x * y
        - 0.5 * (a11 * b22 + a22 * b11 - 2.0 * a12 * b12)
        + ni * nj
}

/// QFIM by integrating the SLD product symbol against the Wigner function.
pub fn qfim_grid(sigma: &Matrix2<f64>, d_sigma: &[Matrix2<f64>; 2]) -> Matrix2<f64> {
    let inv = sigma.try_inverse().unwrap();
    let phi = [inv * d_sigma[0] * inv * 0.5, inv * d_sigma[1] * inv * 0.5];
    let nu = [(phi[0] * sigma).trace(), (phi[1] * sigma).trace()];
    let mut h = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            h[(i, j)] = phase_space_integral(sigma, 12.0, 24, |x, y| sld_product_symbol(&phi[i], &phi[j], nu[i], nu[j], x, y));
        }
    }
    h
}

/// Homodyne outcome density for covariance σ, phase θ, efficiency η, evaluated
/// from the Gaussian law without the closed-form Fisher expression.
pub fn homodyne_density(sigma: &Matrix2<f64>, theta: f64, eta: f64, k: f64) -> f64 {
    let r = Vector2::new(theta.cos(), theta.sin());
    let v = r.dot(&(sigma * r));
    let var = (1.0 - eta + 2.0 * eta * v) / (4.0 * eta);
    (-k * k / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// CFIM from its definition ∫ P ∂ᵢln P ∂ⱼln P dk, with ∂ ln P by central
/// differences along σ + t ∂ᵢσ and the integral by composite Gauss–Legendre.
pub fn cfim_quadrature(sigma: &Matrix2<f64>, d_sigma: &[Matrix2<f64>; 2], theta: f64, eta: f64) -> Matrix2<f64> {
    let r = Vector2::new(theta.cos(), theta.sin());
    let sd = ((1.0 - eta + 2.0 * eta * r.dot(&(sigma * r))) / (4.0 * eta)).sqrt();
    let rule = composite_rule(-14.0 * sd, 14.0 * sd, 200, 12);
    let t = 1e-5;
    let dlog = |i: usize, k: f64| {
        let p = homodyne_density(&(sigma + d_sigma[i] * t), theta, eta, k).ln();
        let m = homodyne_density(&(sigma - d_sigma[i] * t), theta, eta, k).ln();
        let p2 = homodyne_density(&(sigma + d_sigma[i] * (t / 2.0)), theta, eta, k).ln();
        let m2 = homodyne_density(&(sigma - d_sigma[i] * (t / 2.0)), theta, eta, k).ln();
        let coarse = (p - m) / (2.0 * t);
        let fine = (p2 - m2) / t;
        (4.0 * fine - coarse) / 3.0
    };
    let mut f = Matrix2::zeros();
    for &(k, w) in &rule {
        let p = homodyne_density(sigma, theta, eta, k);
        let g = [dlog(0, k), dlog(1, k)];
        for i in 0..2 {
            for j in 0..2 {
                f[(i, j)] += w * p * g[i] * g[j];
            }
        }
    }
    f
}
