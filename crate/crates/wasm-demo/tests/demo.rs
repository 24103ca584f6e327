use formbound_wasm_demo::{drift_profile, radial_slope, verdict, MAX_PATHS};

#[test]
fn verdict_labels() {
    assert_eq!(verdict(0.2, 3).unwrap().label(), "existence_certified");
    assert_eq!(verdict(1.0, 3).unwrap().label(), "open_gap");
    assert_eq!(verdict(3.0, 3).unwrap().label(), "nonexistence");
    assert!(verdict(0.2, 2).is_err());
}

#[test]
fn profile_is_capped_and_matches_far_field() {
    let points = 40;
    let v = drift_profile(0.5, 3, 4, 2.0, points).unwrap();
    assert_eq!(v.len(), 2 * points);
    let (moll, raw) = v.split_at(points);
    assert!(moll.iter().all(|x| x.is_finite()));
    assert!(moll[0] < raw[0]);
    // Far from the origin the two curves differ only at order (eps/r)^2.
    let last = points - 1;
    let rel = (moll[last] - raw[last]).abs() / raw[last];
    assert!(rel < 0.01, "relative gap {rel}");
    assert!(drift_profile(0.5, 3, 4, 0.0, 10).is_err());
}

#[test]
fn small_slope_run() {
    let r = radial_slope(0.2, 3, 8, 2000, 3).unwrap();
    assert_eq!(r.len(), 4);
    assert!((r[0] - r[2]).abs() <= (3.0 * r[1]).max(0.1 * r[2]));
    assert_eq!(r, radial_slope(0.2, 3, 8, 2000, 3).unwrap());
    assert!(radial_slope(0.2, 3, 8, MAX_PATHS + 1, 3).is_err());
}
