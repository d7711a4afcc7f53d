use lvfront_web::compute::*;

#[test]
fn speed_curve_endpoints() {
    let c = speed_curve(3.5, 12.0, 5).unwrap();
    assert_eq!(c.len(), 10);
    assert_eq!((c[0], c[8]), (3.5, 12.0));
    assert!((c[9] - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(speed_curve(2.0, 12.0, 5).is_err());
}

#[test]
fn family_speeds_have_opposite_limits() {
    let v = family_speeds(3.5, 12.0, 0.0).unwrap();
    assert!((v[2] - 38f64.sqrt() / 114.0).abs() < 1e-12);
    let sharp = 2f64.sqrt() / 6.0 - 5.0 * 21f64.sqrt() / 63.0;
    assert!((v[3] - sharp).abs() < 1e-10, "{}", v[3]);
    assert!(family_speeds(2.0, 12.0, 0.0).is_err());
}

#[test]
fn logistic_state_is_periodic_and_positive() {
    let p = logistic_state(1.0, 0.5, 1.0, 2.0, 512).unwrap();
    let n = p.len() / 2;
    assert_eq!(n, 513);
    assert!((p[1] - p[2 * n - 1]).abs() < 1e-12);
    assert!(p.chunks(2).all(|tp| tp[1] > 0.0));
}

#[test]
fn separatrix_starts_at_saddle() {
    let v = separatrix_points(3.5, 32).unwrap();
    assert_eq!(v.len(), 2 + 64);
    assert!((v[0] - 3.0 / 22.0).abs() < 1e-12 && (v[1] - 20.0 / 77.0).abs() < 1e-12);
}
