mod common;

use common::{horner, rodrigues_coefficients};
use hpnedelec::poly1d::{gauss_rule, integrated_legendre, legendre, legendre_derivative, tensor_rule, LegendreTable, PolynomialDegree};
use proptest::prelude::*;

#[test]
fn l4_at_0_3_matches_rodrigues() {
    // (35 x^4 - 30 x^2 + 3) / 8 at x = 0.3
    let want = (35.0 * 0.0081 - 30.0 * 0.09 + 3.0) / 8.0;
    assert!((legendre(4, 0.3) - want).abs() < 1e-15);
    assert!((horner(&rodrigues_coefficients(4), 0.3) - want).abs() < 1e-15);
}

#[test]
fn recurrence_matches_rodrigues_up_to_degree_12() {
    for n in 0..=12 {
        let c = rodrigues_coefficients(n);
        for k in 0..=40 {
            let x = -1.0 + k as f64 / 20.0;
            assert!((legendre(n, x) - horner(&c, x)).abs() < 1e-12, "n = {n}, x = {x}");
        }
    }
}

#[test]
fn integrated_legendre_is_antiderivative() {
    // L_n(x) = ∫_{-1}^x l_{n-1} for n >= 2: integrate the monomial form exactly.
    for n in 2..=10 {
        let c = rodrigues_coefficients(n - 1);
        let anti: Vec<f64> = std::iter::once(0.0)
            .chain(c.iter().enumerate().map(|(k, a)| a / (k + 1) as f64))
            .collect();
        for k in 0..=10 {
            let x = -1.0 + k as f64 / 5.0;
            let want = horner(&anti, x) - horner(&anti, -1.0);
            let got = integrated_legendre(n, x).unwrap();
            assert!((got - want).abs() < 1e-13, "L_{n}({x}): {got} vs {want}");
        }
    }
}

#[test]
fn first_integrated_legendre_is_x() {
    for &x in &[-1.0, -0.2, 0.5, 1.0] {
        assert_eq!(integrated_legendre(1, x).unwrap(), x);
    }
}

#[test]
fn derivative_by_finite_differences() {
    let h = 1e-6;
    for n in 0..=9 {
        for &x in &[-0.9, -0.31, 0.0, 0.42, 0.77] {
            let fd = (legendre(n, x + h) - legendre(n, x - h)) / (2.0 * h);
            assert!((legendre_derivative(n, x) - fd).abs() < 1e-7, "n = {n}, x = {x}");
        }
    }
}

#[test]
fn two_point_rule_closed_form() {
    let r = gauss_rule(2, [-1.0, 1.0]).unwrap();
    let s = 1.0 / 3f64.sqrt();
    assert!((r.points[0] + s).abs() < 1e-15 && (r.points[1] - s).abs() < 1e-15);
    assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
}

#[test]
fn tensor_rule_weights_sum_to_volume() {
    for dim in [2, 3] {
        for n in 1..6 {
            let s: f64 = tensor_rule(dim, n).unwrap().iter().map(|(_, w)| w).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(PolynomialDegree::new(0).is_err());
    assert!(integrated_legendre(0, 0.5).is_err());
    assert!(gauss_rule(0, [0.0, 1.0]).is_err());
}

proptest! {
    #[test]
    fn parity_and_bounds(n in 0usize..14, x in -1.0f64..1.0) {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((legendre(n, -x) - sign * legendre(n, x)).abs() < 1e-13);
        prop_assert!(legendre(n, x).abs() <= 1.0 + 1e-13);
    }

    #[test]
    fn integrated_vanish_at_ends(n in 2usize..14) {
        prop_assert!(integrated_legendre(n, -1.0).unwrap().abs() < 1e-14);
        prop_assert!(integrated_legendre(n, 1.0).unwrap().abs() < 1e-13);
    }

    #[test]
    fn gauss_exact_for_degree_2n_minus_1(n in 1usize..20, a in -2.0f64..0.0, len in 0.1f64..3.0) {
        let b = a + len;
        let r = gauss_rule(n, [a, b]).unwrap();
        let k = 2 * n - 1;
        let got = r.integrate(|x| x.powi(k as i32));
        let want = (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64;
        prop_assert!((got - want).abs() < 1e-11 * want.abs().max(1.0));
    }

    #[test]
    fn table_matches_scalar_functions(x in -1.0f64..1.0) {
        let mut t = LegendreTable::new(9);
        t.fill(x);
        for n in 0..=9 {
            prop_assert!((t.l[n] - legendre(n, x)).abs() < 1e-14);
            if n >= 1 {
                prop_assert!((t.il[n] - integrated_legendre(n, x).unwrap()).abs() < 1e-14);
            }
        }
    }
}
