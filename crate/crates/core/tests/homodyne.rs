mod common;

use common::{composite_rule, homodyne_density, random_physical_sigma, rng};
use optomech::inference::{homodyne_pdf, sample_homodyne, sufficient_statistic};
use optomech::{Disorder, Evaluation, Model, SystemParams};

fn tr_law() -> (nalgebra::Matrix2<f64>, f64, f64) {
    let p = SystemParams::measured_profile(Model::Transmissive);
    let e = Evaluation::new(&p, &Disorder::new(5e-7, 0.0)).unwrap();
    (e.output(0.0).unwrap().output.sigma, p.lo_phase, 1.0)
}

#[test]
fn density_is_normalized() {
    let mut r = rng(3);
    for eta in [0.2, 0.75, 1.0] {
        let s = random_physical_sigma(&mut r);
        let law = homodyne_pdf(&s, 0.4, eta).unwrap();
        let sd = law.variance().sqrt();
        let total: f64 = composite_rule(-16.0 * sd, 16.0 * sd, 64, 12).iter().map(|&(k, w)| w * law.pdf(k)).sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        // Same law as the one built directly from the quadrature variance.
        assert!((law.pdf(0.3 * sd) - homodyne_density(&s, 0.4, eta, 0.3 * sd)).abs() < 1e-12 * law.pdf(0.0));
    }
}

#[test]
fn large_sample_moments_at_measured_profile() {
    let (s, theta, eta) = tr_law();
    let law = homodyne_pdf(&s, theta, eta).unwrap();
    let n = 1_000_000;
    let k = sample_homodyne(&law, n, 42).unwrap();
    let mean = k.iter().sum::<f64>() / n as f64;
    let var = k.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 4.0 / (law.rate * n as f64).sqrt(), "mean {mean}");
    assert!((var * law.rate - 1.0).abs() < 0.01, "var·r = {}", var * law.rate);
}

#[test]
fn statistic_expectation_matches_closed_form() {
    let mut r = rng(8);
    let s = random_physical_sigma(&mut r);
    let (theta, eta) = (1.1, 0.6);
    let law = homodyne_pdf(&s, theta, eta).unwrap();
    let n = 200_000;
    let t = sufficient_statistic(&sample_homodyne(&law, n, 5).unwrap()).unwrap();
    let rv = nalgebra::Vector2::new(theta.cos(), theta.sin());
    let expect = (1.0 - eta + 2.0 * eta * rv.dot(&(s * rv))) / (4.0 * eta);
    // Var(k²) = 2/r² for a centred Gaussian.
    let se = (2.0f64).sqrt() * expect / (n as f64).sqrt();
    assert!((t / n as f64 - expect).abs() < 3.0 * se);
}
