use quenched_web::{density, response, variance};

#[test]
fn density_is_a_probability_density() {
    let h = density(0.05, 0.5, 0.0, 0, 512).unwrap();
    let mass = h.iter().sum::<f64>() / h.len() as f64;
    assert!((mass - 1.0).abs() <= 1e-12);
    assert!(h.iter().all(|v| *v > 0.0));
}

#[test]
fn series_matches_finite_difference() {
    let r = response(0.05, 0.5, 3).unwrap();
    assert!((r[0] - r[1]).abs() <= 1e-4 * r[1].abs(), "{r:?}");
}

#[test]
fn doubling_variance_is_one_half() {
    let v = variance(0.0, 1.0, 0.0, 1).unwrap();
    assert!((v[0] - 0.5).abs() <= 1e-10, "{v:?}");
}
