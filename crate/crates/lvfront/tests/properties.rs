use lvfront::kinetics::{poincare_map, PeriodicSystem};
use lvfront::logistic::periodic_logistic_closed_form;
use lvfront::periodic_fn::{example_family, PeriodicFn};
use lvfront::stats::fit_line;
use lvfront::wavespeed::{exact_speed, sign_classify, SignClass};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn logistic_state_stays_in_bracket(
        rm in 0.5f64..3.0, rc in -0.4f64..0.4, rs in -0.4f64..0.4,
        am in 0.5f64..2.0, ac in -0.3f64..0.3, t in 0.05f64..50.0,
    ) {
        let r = PeriodicFn::trig(rm, vec![rc * rm], vec![rs * rm]).unwrap();
        let a = PeriodicFn::trig(am, vec![ac * am], vec![]).unwrap();
        let p = periodic_logistic_closed_form(&r, &a, t, 512).unwrap();
        let (rlo, rhi) = r.bounds();
        let (alo, ahi) = a.bounds();
        for &v in p.samples() {
            prop_assert!(v >= rlo / ahi - 1e-9 && v <= rhi / alo + 1e-9);
        }
        prop_assert!((p.samples()[0] - p.samples()[512]).abs() <= 1e-10);
    }

    #[test]
    fn exact_speed_increases_and_vanishes_at_six(r in 3.01f64..20.0, dr in 1e-3f64..5.0) {
        let c = exact_speed(r).unwrap();
        prop_assert!(exact_speed(r + dr).unwrap() > c);
        prop_assert_eq!(c > 0.0, r > 6.0);
    }

    #[test]
    fn sign_classes_mirror(c in -1.0f64..1.0, ci in 0.0f64..0.01, tol in 1e-4f64..1e-2) {
        let mirror = match sign_classify(c, ci, tol) {
            SignClass::Positive => SignClass::Negative,
            SignClass::Negative => SignClass::Positive,
            other => other,
        };
        prop_assert_eq!(sign_classify(-c, ci, tol), mirror);
    }

    #[test]
    fn line_fit_is_exact_on_lines(a in -5.0f64..5.0, b in -5.0f64..5.0, n in 3usize..50) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|x| a * x + b).collect();
        let f = fit_line(&x, &y).unwrap();
        prop_assert!((f.slope - a).abs() <= 1e-9 && (f.intercept - b).abs() <= 1e-9);
        prop_assert!(f.residual_rms <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn poincare_map_preserves_order(
        l1 in 0.0f64..1.0, l2 in 0.0f64..1.0, u1 in 0.0f64..1.0, u2 in 0.0f64..1.0, t in 0.1f64..5.0,
    ) {
        let model = PeriodicSystem::new(&example_family(3.5, 12.0, 0.02, t).unwrap(), 1024).unwrap();
        let lo = [l1, l2];
        let hi = [l1 + (1.0 - l1) * u1, l2 + (1.0 - l2) * u2];
        let (a, _) = poincare_map(&model, lo, 2048).unwrap();
        let (b, _) = poincare_map(&model, hi, 2048).unwrap();
        prop_assert!(a[0] <= b[0] + 1e-10 && a[1] <= b[1] + 1e-10);
    }
}
