//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every entry point builds the two-map family
//!
//! ```text
//! T_0(x) = 2x + a sin 2πx
//! T_1(x) = 2x + 0.25 + 0.03 cos 2πx + 0.01 sin 4πx
//! T_eps  = (Id + eps·0.1 sin 2π·) ∘ T
//! ```
//!
//! driven by a biased coin that picks `T_0` with probability `p`.

use quenched_core::clt::{sigma2, VarianceOptions};
use quenched_core::cocycle::{estimate_decay, sample_path, Cocycle, DrivingSystem};
use quenched_core::equivariant::pullback_density;
use quenched_core::maps::{CircleMap, MapFamily, PerturbationKind, TrigPoly};
use quenched_core::observable::Observable;
use quenched_core::response::{
    finite_difference_response, quenched_response, FiniteDifference, ResponseOptions,
};
use quenched_core::spectral::{Discretization, SpectralVector};
use wasm_bindgen::prelude::*;

const ORDER: usize = 32;
const N_PULLBACK: usize = 40;
const MAX_TERMS: usize = 30;
const TOL: f64 = 1e-12;
const SEED: u64 = 1;

fn err(e: quenched_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn setup(amplitude: f64, p: f64) -> Result<(Cocycle, DrivingSystem), JsError> {
    let maps = vec![
        CircleMap::new(2, TrigPoly::sine(1, amplitude)),
        CircleMap::new(2, TrigPoly::new(0.25, vec![0.03], vec![0.0, 0.01])),
    ];
    let family = MapFamily::new(
        PerturbationKind::Composed,
        maps,
        vec![TrigPoly::sine(1, 0.1)],
        0.1,
    )
    .map_err(err)?;
    let driving = if p >= 1.0 {
        DrivingSystem::deterministic(SEED)
    } else {
        DrivingSystem::bernoulli(vec![p, 1.0 - p], SEED).map_err(err)?
    };
    let disc = Discretization::new(ORDER, 8).map_err(err)?;
    Ok((Cocycle::new(family, disc), driving))
}

fn cos1() -> TrigPoly {
    TrigPoly::new(0.0, vec![1.0], vec![])
}

/// Equivariant density `h_ω^eps` of path `draw`, sampled at `points`
/// equispaced points of `[0, 1)`.
#[wasm_bindgen]
pub fn density(amplitude: f64, p: f64, eps: f64, draw: u32, points: u32) -> Result<Vec<f64>, JsError> {
    let (c, driving) = setup(amplitude, p)?;
    let path = sample_path(&driving, N_PULLBACK, u64::from(draw)).map_err(err)?;
    let h = pullback_density(&c, &path, eps, N_PULLBACK, TOL).map_err(err)?;
    let n = points.max(2);
    Ok((0..n).map(|i| h.density.eval(f64::from(i) / f64::from(n))).collect())
}

/// `∂_eps ∫ cos 2πx dh_ω^eps` on path `draw`, as
/// `[series, finite difference, tail bound, terms used]`.
#[wasm_bindgen]
pub fn response(amplitude: f64, p: f64, draw: u32) -> Result<Vec<f64>, JsError> {
    let (c, driving) = setup(amplitude, p)?;
    let path = sample_path(&driving, N_PULLBACK + MAX_TERMS + 2, u64::from(draw)).map_err(err)?;
    let decay = estimate_decay(&c, &driving, 0.0, 4, 30).map_err(err)?;
    let phi = SpectralVector::from_trig(ORDER, &cos1());
    let opts = ResponseOptions {
        n_terms: None,
        max_terms: MAX_TERMS,
        n_pullback: N_PULLBACK,
        observable_side: false,
    };
    let r = quenched_response(&c, &path, &phi, &decay, &opts).map_err(err)?;
    let fd = FiniteDifference {
        step: 1e-3,
        n_pullback: N_PULLBACK,
        tol: TOL,
    };
    let value_fd = finite_difference_response(&c, &path, &phi, &fd).map_err(err)?;
    Ok(vec![r.value, value_fd, r.tail_bound, r.n_terms as f64])
}

/// Green–Kubo variance of `cos 2πx` over `samples` paths, as `[Σ², stderr]`.
#[wasm_bindgen]
pub fn variance(amplitude: f64, p: f64, eps: f64, samples: u32) -> Result<Vec<f64>, JsError> {
    let (c, driving) = setup(amplitude, p)?;
    let opts = VarianceOptions {
        samples: samples.max(1) as usize,
        n_corr: 20,
        n_pullback: N_PULLBACK,
        n_terms: 20,
    };
    let v = sigma2(&c, &driving, &Observable::shared(cos1()), eps, &opts).map_err(err)?;
    Ok(vec![v.sigma2, v.stderr])
}
