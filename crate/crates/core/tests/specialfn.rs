use std::f64::consts::{E, PI};

use nakao_core::quad::Tolerance;
use nakao_core::specialfn::{
    bessel_k, lambda_mu, lambda_mu_prime, phi, phi_mass, BesselOrder, LambdaBound, MassBound,
    Multiplier,
};
use proptest::prelude::*;

fn k(l: f64, z: f64) -> f64 {
    bessel_k(BesselOrder::new(l).unwrap(), z).unwrap()
}

#[test]
fn phi_reference_values() {
    assert_eq!(phi(1, 0.0).unwrap(), 2.0);
    assert!((phi(2, 0.0).unwrap() - 2.0 * PI).abs() < 1e-12);
    assert!((phi(1, 1.0).unwrap() - (E + 1.0 / E)).abs() < 1e-15);
    assert!(phi(0, 1.0).is_err());
    assert!(phi(2, f64::NAN).is_err());
}

#[test]
fn bessel_reference_values() {
    assert!((k(0.5, 1.0) - (PI / 2.0).sqrt() / E).abs() < 1e-10);
    assert!((k(0.0, 1.0) - 0.421_024_438_240_708_3).abs() < 1e-10);
    assert!((k(1.0, 1.0) - 0.601_907_230_197_234_6).abs() < 1e-10);
    assert!(k(1.0, 1.0) > k(0.0, 1.0));
    assert!(bessel_k(BesselOrder::new(0.0).unwrap(), 0.0).is_err());
    assert!(BesselOrder::new(-0.5).is_err());
}

#[test]
fn multiplier_reference_values() {
    assert!((lambda_mu(0.0, 1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-10);
    assert!((lambda_mu(0.0, 0.0).unwrap() - 0.461_068_504_447_894_4).abs() < 1e-10);
    assert!((lambda_mu(0.0, 2.0).unwrap() - lambda_mu(0.0, 0.0).unwrap()).abs() < 1e-15);
    // ((μ+1)/2 + ℓ) = 1 at μ = 1, so λ'(0) = K₀(1) - K₁(1).
    assert!((lambda_mu_prime(0.0, 1.0).unwrap() + 0.180_882_791_956_526_2).abs() < 1e-9);
    assert_eq!(Multiplier::new(3.0).unwrap().order().value(), 1.0);
    assert!(Multiplier::new(-1.0).is_err());
}

#[test]
fn derivative_at_two_matches_difference() {
    let h = 1e-5;
    let fd = (lambda_mu(2.0 + h, 0.0).unwrap() - lambda_mu(2.0 - h, 0.0).unwrap()) / (2.0 * h);
    let an = lambda_mu_prime(2.0, 0.0).unwrap();
    assert!((fd / an - 1.0).abs() < 1e-6);
}

#[test]
fn multiplier_ode_on_a_grid() {
    let tol = Tolerance::DEFAULT.refined(100.0);
    for mu in [0.5, 1.0, 2.0, 3.0] {
        let m = Multiplier::new(mu).unwrap();
        for i in 0..=40 {
            let t = 0.5 * i as f64;
            let r = m.ode_residual(t, 1e-4, tol).unwrap();
            assert!(
                r.abs() <= 1e-5 * m.lambda(t).unwrap().max(1.0),
                "mu={mu} t={t}: {r}"
            );
        }
    }
}

#[test]
fn two_sided_bound_is_finite() {
    for mu in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let b = LambdaBound::calibrate(mu, 30.0, 0.1, Tolerance::DEFAULT).unwrap();
        assert!(b.min_ratio > 0.0 && b.max_ratio < f64::INFINITY);
        assert!(b.c1 >= b.max_ratio && 1.0 / b.c1 <= b.min_ratio * (1.0 + 1e-12));
    }
}

#[test]
fn mass_never_exceeds_bound() {
    for (n, r) in [(1, 1.5), (2, 2.0), (3, 1.5)] {
        let mb = MassBound::calibrate(n, r, 1.0, 20.0).unwrap();
        for i in 0..=80 {
            let e = mb.evaluate(0.25 * i as f64).unwrap();
            assert!(e.integral <= e.bound, "n={n} r={r} t={}", 0.25 * i as f64);
        }
    }
}

#[test]
fn one_dimensional_mass() {
    let m = phi_mass(1, 2.0, 1.0, 0.0).unwrap();
    let exact = 2.0 * 2f64.sinh() + 4.0;
    assert!((m.integral - exact).abs() < 1e-9 * exact);
    assert!(m.integral <= m.bound);
    assert!(phi_mass(1, 1.0, 1.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_increases_with_order(l1 in 0.0f64..3.0, dl in 0.0f64..2.0, z in 0.05f64..40.0) {
        prop_assert!(k(l1 + dl, z) >= k(l1, z) * (1.0 - 1e-12));
    }

    #[test]
    fn half_order_closed_form(z in 0.1f64..30.0) {
        let exact = (PI / (2.0 * z)).sqrt() * (-z).exp();
        prop_assert!((k(0.5, z) / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn derivative_consistency(t in 0.01f64..15.0, mu in 0.0f64..4.0) {
        let h = 1e-4;
        let fd = (lambda_mu(t + h, mu).unwrap() - lambda_mu(t - h, mu).unwrap()) / (2.0 * h);
        let an = lambda_mu_prime(t, mu).unwrap();
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(lambda_mu(t, mu).unwrap()));
    }

    #[test]
    fn phi_solves_its_eigen_equation(r in 0.3f64..6.0, n in 2u32..4) {
        let h = 1e-3;
        let f = |x: f64| phi(n, x).unwrap();
        let lap = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h)
            + (n as f64 - 1.0) / r * (f(r + h) - f(r - h)) / (2.0 * h);
        prop_assert!((lap / f(r) - 1.0).abs() < 1e-4);
    }
}
