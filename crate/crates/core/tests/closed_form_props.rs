use averager_core::averaging::jacobian_determinant;
use averager_core::closed_form::{sign_region, ClosedFormError};
use averager_core::*;
use proptest::prelude::*;

fn draw() -> impl Strategy<Value = (f64, f64, f64)> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.3..3.0f64).prop_filter("non-degenerate", |&(a2, b2, d)| classify(a2, b2, d).is_ok())
}

fn g_at(a2: f64, b2: f64, d: f64) -> impl Fn(&[f64]) -> Vec<f64> {
    move |z: &[f64]| g_closed(z[0], z[1], a2, b2, d).to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn classify_counts_predicted_roots((a2, b2, d) in draw()) {
        prop_assert_eq!(classify(a2, b2, d).unwrap().count(), predicted_roots(a2, b2, d).roots.len());
    }

    #[test]
    fn roots_are_zeros_of_g((a2, b2, d) in draw()) {
        let pred = predicted_roots(a2, b2, d);
        for (root, &det) in pred.roots.iter().zip(&pred.jac_dets) {
            prop_assert!(root[0] > 0.0);
            let g = g_closed(root[0], root[1], a2, b2, d);
            let scale = (1.0 + root[0] + root[1].abs()).powi(3) * (1.0 + a2.abs() + b2.abs()) / d.powi(5);
            prop_assert!(g[0].abs() < 1e-12 * scale && g[1].abs() < 1e-12 * scale, "{g:?}");
            let fd = jacobian_determinant(&g_at(a2, b2, d), root);
            prop_assert!((fd - det).abs() < 1e-6 * det.abs().max(1e-3), "{fd} vs {det}");
        }
    }

    #[test]
    fn g_is_odd_in_w(a2 in -5.0..5.0f64, b2 in -5.0..5.0f64, d in 0.3..3.0f64, r in 0.0..10.0f64, w in -5.0..5.0f64) {
        let p = g_closed(r, w, a2, b2, d);
        let m = g_closed(r, -w, a2, b2, d);
        prop_assert_eq!(p[0], m[0]);
        prop_assert_eq!(p[1], -m[1]);
    }

    #[test]
    fn classify_refines_region((a2, b2, d) in draw()) {
        let region = sign_region(a2, b2, d).unwrap();
        let case = classify(a2, b2, d).unwrap();
        prop_assert!(case.count() <= region.count());
        prop_assert_eq!(case.count() % 2, region.count() % 2);
    }
}

#[test]
fn degenerate_sets_are_rejected() {
    for (a2, b2, d) in [(1.0, 1.0, 3f64.sqrt()), (1.0, 2.0, 1.0), (1.0, 1.0, 1.0), (2.0, -1.0, 1.0)] {
        assert!(matches!(classify(a2, b2, d), Err(ClosedFormError::HypothesisViolated(_))));
        assert!(matches!(predicted_roots(a2, b2, d).count, PredictionCount::Degenerate(_)));
    }
}

#[test]
fn c_terms_do_not_change_g() {
    let q = QuadratureSpec::default();
    for (c1, c2) in [(0.0, 0.0), (1.5, -0.7), (-2.0, 3.0)] {
        let sf = jerk_standard_form(UnfoldingParams::second_order(1.0, 5.0, c1, c2, 2.0)).unwrap();
        for (r, w) in [(4.0, 0.0), (1.0, 1.0), (6.0, -2.0)] {
            let num = average_second(&sf, &[r, w], &q).unwrap().value;
            let exact = g_closed(r, w, 1.0, 5.0, 2.0);
            assert!((num[0] - exact[0]).abs() < 1e-9 && (num[1] - exact[1]).abs() < 1e-9);
        }
    }
}
