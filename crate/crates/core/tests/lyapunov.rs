mod common;

use common::{lyapunov_quadrature, random_psd, random_stable, rng};
use nalgebra::{DMatrix, DVector};
use optomech::gaussian::{solve_lyapunov, LyapunovSolver};
use proptest::prelude::*;

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn random_systems_match_integral_oracle() {
    let mut r = rng(20_240_601);
    for case in 0..50 {
        let n = if case % 2 == 0 { 6 } else { 10 };
        let a = random_stable(&mut r, n);
        let d = random_psd(&mut r, n, n);
        let c = solve_lyapunov(&a, &d).unwrap();
        assert!(c.residual < 1e-10, "case {case}: residual {}", c.residual);
        let oracle = lyapunov_quadrature(&a, &d, 1e-16);
        let e = rel(&c.sigma, &oracle);
        assert!(e < 1e-8, "case {case} (n = {n}): relative error {e:e}");
    }
}

#[test]
fn rank_deficient_noise_matches_oracle() {
    let mut r = rng(7);
    let a = random_stable(&mut r, 6);
    let d = random_psd(&mut r, 6, 1);
    let c = solve_lyapunov(&a, &d).unwrap();
    assert!(rel(&c.sigma, &lyapunov_quadrature(&a, &d, 1e-16)) < 1e-8);
}

#[test]
fn solver_is_deterministic() {
    let mut r = rng(11);
    let a = random_stable(&mut r, 10);
    let d = random_psd(&mut r, 10, 10);
    assert_eq!(solve_lyapunov(&a, &d).unwrap().sigma, solve_lyapunov(&a, &d).unwrap().sigma);
}

#[test]
fn near_singular_operator_is_flagged() {
    // Eigenvalues −1e-15 ± i: the Lyapunov operator is nearly singular.
    let a = DMatrix::from_row_slice(2, 2, &[-1e-15, 1.0, -1.0, -1e-15]);
    let s = LyapunovSolver::new(&a).unwrap();
    assert!(s.condition() > 1e14);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0]));
    // The solution exists but carries the warning.
    if let Ok(c) = solve_lyapunov(&a, &d) {
        assert!(c.ill_conditioned);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_and_symmetry_hold(seed in any::<u64>(), n in 2usize..9) {
        let mut r = rng(seed);
        let a = random_stable(&mut r, n);
        let d = random_psd(&mut r, n, n);
        let c = solve_lyapunov(&a, &d).unwrap();
        prop_assert!(c.residual < 1e-10);
        prop_assert!((&c.sigma - c.sigma.transpose()).amax() <= 1e-12 * c.sigma.amax());
        // Stationary covariance of PSD noise is PSD.
        prop_assert!(c.sigma.symmetric_eigenvalues().min() >= -1e-10 * c.sigma.amax());
    }

    #[test]
    fn linear_in_the_noise(seed in any::<u64>(), s in 0.1f64..10.0) {
        let mut r = rng(seed);
        let a = random_stable(&mut r, 5);
        let d = random_psd(&mut r, 5, 3);
        let one = solve_lyapunov(&a, &d).unwrap().sigma;
        let scaled = solve_lyapunov(&a, &(&d * s)).unwrap().sigma;
        prop_assert!(rel(&scaled, &(one * s)) < 1e-12);
    }
}
