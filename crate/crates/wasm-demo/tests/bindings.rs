use fracexp_wasm_demo::{fbm_path_values, ml_curve_values, simulate_profile_values};

#[test]
fn exponential_curve() {
    let v = ml_curve_values(1.0, 1.0, 4.0, 5).unwrap();
    for (k, y) in v.iter().enumerate() {
        assert!((y - (-(k as f64)).exp()).abs() < 1e-14);
    }
    assert!(ml_curve_values(0.0, 1.0, 4.0, 5).is_err());
}

#[test]
fn fbm_path_starts_at_zero_and_is_reproducible() {
    let a = fbm_path_values(0.7, 64, 9).unwrap();
    assert_eq!(a.len(), 65);
    assert_eq!(a[0], 0.0);
    assert_eq!(a, fbm_path_values(0.7, 64, 9).unwrap());
    assert_ne!(a, fbm_path_values(0.7, 64, 10).unwrap());
}

#[test]
fn profile_layout() {
    let n = 15;
    let steps = 8;
    let v = simulate_profile_values(0.75, 0.75, n, steps, 0.1, 0.2, 1).unwrap();
    assert_eq!(v.len(), (steps + 1) * (n + 2));
    for row in v.chunks(n + 2) {
        assert_eq!(row[0], 0.0);
        assert_eq!(row[n + 1], 0.0);
    }
    // initial row is the projection of sin(pi x), peak near the midpoint
    assert!((v[8] - 1.0).abs() < 0.02);
    assert!(simulate_profile_values(0.3, 0.75, n, steps, 0.1, 0.2, 1).is_err());
}
