mod common;

use common::*;
use quenched_core::clt::{
    clt_empirical, sigma2, sigma2_derivative, sigma2_finite_difference, DensitySampler,
    VarianceOptions,
};
use quenched_core::cocycle::{sample_path, Cocycle, DrivingSystem, OmegaPath};
use quenched_core::maps::{MapFamily, Symbol, TrigPoly};
use quenched_core::observable::Observable;
use quenched_core::spectral::{Discretization, SpectralVector};
use quenched_core::stats::mean_stderr;
use quenched_core::Error;

fn cosine() -> Observable {
    Observable::shared(TrigPoly::cosine(1, 1.0))
}

#[test]
fn doubling_variance_is_one_half() {
    let c = Cocycle::new(MapFamily::linear(2).unwrap(), Discretization::default());
    let d = DrivingSystem::deterministic(0);
    let opts = VarianceOptions {
        samples: 1,
        ..VarianceOptions::default()
    };
    let v = sigma2(&c, &d, &cosine(), 0.0, &opts).unwrap();
    assert!((v.sigma2 - 0.5).abs() <= 1e-10, "{}", v.sigma2);
    assert!(v.terms[1..].iter().all(|t| t.abs() <= 1e-14));
}

#[test]
fn random_variance_matches_orbit_simulation() {
    let fam = random_family();
    let c = Cocycle::new(fam.clone(), Discretization::default());
    let d = bernoulli(1);
    let opts = VarianceOptions {
        samples: 40,
        ..VarianceOptions::default()
    };
    let v = sigma2(&c, &d, &cosine(), 0.0, &opts).unwrap();
    let f = |x: f64| (std::f64::consts::TAU * x).cos();
    let orbit = orbit_variances(&fam, &d, f, 8, 1000, 5000, 40);
    let (mean, se) = mean_stderr(&orbit);
    let combined = v.stderr.hypot(se);
    assert!((v.sigma2 - mean).abs() <= 3.0 * combined, "{} vs {mean} ± {combined}", v.sigma2);
}

#[test]
fn variance_is_nonnegative() {
    let c = Cocycle::new(random_family(), Discretization::new(32, 8).unwrap());
    let d = bernoulli(4);
    let opts = VarianceOptions {
        samples: 10,
        ..VarianceOptions::default()
    };
    for obs in [
        cosine(),
        Observable::shared(TrigPoly::new(0.3, vec![0.0, 1.0], vec![0.5])),
        Observable::per_symbol(vec![TrigPoly::sine(1, 1.0), TrigPoly::cosine(2, -1.0)]).unwrap(),
    ] {
        for eps in [-0.1, 0.0, 0.05] {
            let v = sigma2(&c, &d, &obs, eps, &opts).unwrap();
            // single-path Green-Kubo sums may be negative; their mean may not
            assert!(v.sigma2 >= -1e-8, "{}", v.sigma2);
            assert!(v.centering_defect <= 1e-12);
        }
    }
}

#[test]
fn variance_derivative_matches_finite_differences() {
    let c = Cocycle::new(random_family(), Discretization::new(32, 8).unwrap());
    let d = bernoulli(2);
    let opts = VarianceOptions {
        samples: 6,
        ..VarianceOptions::default()
    };
    let formula = sigma2_derivative(&c, &d, &cosine(), &opts).unwrap();
    let (fd, _) = sigma2_finite_difference(&c, &d, &cosine(), 1e-2, &opts).unwrap();
    assert!((formula.value - fd).abs() <= 1e-2 * fd.abs(), "{} vs {fd}", formula.value);
    assert!(formula.max_term_i <= 1e-10);
    let rebuilt = formula.zeroth + 2.0 * (formula.sum_i + formula.sum_ii + formula.sum_iii);
    assert!((rebuilt - formula.value).abs() <= 1e-12);
}

#[test]
fn sampler_inverts_the_cdf() {
    let h = SpectralVector::from_trig(8, &TrigPoly::new(1.0, vec![0.4], vec![0.2]));
    let s = DensitySampler::new(&h);
    let n = 2000;
    let xs: Vec<f64> = (0..n).map(|i| s.quantile((i as f64 + 0.5) / n as f64)).collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
    // ∫_0^x h = x + 0.4 sin(2πx)/2π + 0.2 (1 − cos 2πx)/2π
    let cdf = |x: f64| {
        let t = std::f64::consts::TAU;
        x + 0.4 * (t * x).sin() / t + 0.2 * (1.0 - (t * x).cos()) / t
    };
    for (i, x) in xs.iter().enumerate() {
        assert!((cdf(*x) - (i as f64 + 0.5) / n as f64).abs() <= 1e-6);
    }
}

#[test]
fn doubling_birkhoff_sums_are_gaussian() {
    let c = Cocycle::new(MapFamily::linear(2).unwrap(), Discretization::new(16, 8).unwrap());
    let path = OmegaPath::constant(Symbol::Letter(0), 2100);
    let r = clt_empirical(&c, &cosine(), 0.0, &path, 2000, 4000, 0.5, 60, 3).unwrap();
    assert!(r.ks_stat <= 0.03, "{}", r.ks_stat);
}

#[test]
fn random_birkhoff_sums_are_gaussian() {
    let c = Cocycle::new(random_family(), Discretization::new(32, 8).unwrap());
    let d = bernoulli(8);
    let s2 = sigma2(
        &c,
        &d,
        &cosine(),
        0.0,
        &VarianceOptions {
            samples: 60,
            ..VarianceOptions::default()
        },
    )
    .unwrap();
    let path = sample_path(&d, 2100, 0).unwrap();
    let r = clt_empirical(&c, &cosine(), 0.0, &path, 2000, 4000, s2.sigma2, 60, 3).unwrap();
    assert!(r.ks_stat <= 0.03, "{}", r.ks_stat);
}

#[test]
fn degenerate_variance_is_rejected() {
    let c = Cocycle::new(MapFamily::linear(2).unwrap(), Discretization::new(16, 8).unwrap());
    let path = OmegaPath::constant(Symbol::Letter(0), 200);
    let err = clt_empirical(&c, &cosine(), 0.0, &path, 100, 10, 0.0, 60, 0).unwrap_err();
    assert!(matches!(err, Error::DegenerateVariance { .. }));
}
