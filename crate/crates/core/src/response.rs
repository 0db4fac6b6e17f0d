//! Quenched and annealed linear response.
//!
//! The response density `ĥ_ω` is accumulated by the forward recurrence
//! `g_{k+1} = L_k g_k + L̂_k h_k` started from zero at `k = −n_terms`, which
//! yields `Σ_{j<n_terms} L^j_{σ^{-j}ω} L̂_{σ^{-j-1}ω} h_{σ^{-j-1}ω}` at `k = 0`.
//! The observable-side series instead pushes `φ` through the Koopman chain
//! pointwise on an oversampled grid.

use serde::{Deserialize, Serialize};

use crate::cocycle::{sample_path, Cocycle, DecayEstimate, DrivingSystem, OmegaPath};
use crate::equivariant::{density_sweep, pullback_density};
use crate::error::{Error, Result};
use crate::exec::{par_map, try_par_map};
use crate::maps::weight_from_jet;
use crate::observable::{Observable, PointEvaluator};
use crate::spectral::{norm, Space, SpectralVector};
use crate::stats::mean_stderr;

/// Target for the estimated truncation tail when `n_terms` is adaptive.
pub const TAIL_TARGET: f64 = 1e-10;

/// Largest quadrature grid used by the observable-side series.
pub const OBSERVABLE_GRID_CAP: usize = 1 << 22;

/// Floor on the cross-check tolerance when the tail bound vanishes.
const CROSS_CHECK_FLOOR: f64 = 1e-12;

const CHUNK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseMethod {
    SeriesHatH,
    SeriesObservable,
    FiniteDifference,
}

/// Densities, increments `L̂_k h_k` and response densities along one path.
#[derive(Debug, Clone)]
pub struct ResponseSweep {
    first: isize,
    densities: Vec<SpectralVector>,
    increments: Vec<SpectralVector>,
    hats: Vec<SpectralVector>,
}

impl ResponseSweep {
    /// Sweep over positions `−n_terms ..= to` with densities pulled back
    /// `n_pullback` steps further.
    pub fn new(
        cocycle: &Cocycle,
        path: &OmegaPath,
        n_terms: usize,
        n_pullback: usize,
        to: isize,
    ) -> Result<Self> {
        if to < 0 {
            return Err(Error::InvalidArgument("sweep must reach position 0".into()));
        }
        let first = -(n_terms as isize);
        let densities = density_sweep(cocycle, path, 0.0, first, to, n_pullback)?;
        let increments = (first..to)
            .map(|k| {
                let h = &densities[(k - first) as usize];
                Ok(cocycle.derivative(path.symbol(k)?)?.apply(h))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut hats = Vec::with_capacity(to as usize + 1);
        let mut g = SpectralVector::zeros(cocycle.order());
        for k in first..=to {
            if k >= 0 {
                hats.push(g.clone());
            }
            if k < to {
                let mut next = cocycle.transfer(path.symbol(k)?, 0.0)?.apply(&g);
                next.axpy(1.0, &increments[(k - first) as usize]);
                g = next;
            }
        }
        Ok(Self {
            first,
            densities,
            increments,
            hats,
        })
    }

    pub fn first(&self) -> isize {
        self.first
    }

    /// `h_{σ^k ω}` for `k ≥ −n_terms`.
    pub fn density(&self, k: isize) -> &SpectralVector {
        &self.densities[(k - self.first) as usize]
    }

    /// `L̂_{σ^k ω} h_{σ^k ω}`.
    pub fn increment(&self, k: isize) -> &SpectralVector {
        &self.increments[(k - self.first) as usize]
    }

    /// `ĥ_{σ^k ω}` for `k ≥ 0`.
    pub fn hat(&self, k: isize) -> &SpectralVector {
        &self.hats[k as usize]
    }

    pub fn increment_sup(&self) -> f64 {
        self.increments
            .iter()
            .map(|v| norm(v, Space::Bs))
            .fold(0.0, f64::max)
    }
}

/// Partial sum of the response-density series over `n_terms` terms.
pub fn hat_h(
    cocycle: &Cocycle,
    path: &OmegaPath,
    n_terms: usize,
    n_pullback: usize,
) -> Result<SpectralVector> {
    Ok(ResponseSweep::new(cocycle, path, n_terms, n_pullback, 0)?
        .hat(0)
        .clone())
}

/// Estimated `|Σ_{j≥n} ⟨φ, L^j L̂ h⟩| ≤ ‖φ‖_∞ · sup‖L̂h‖_s · D′e^{−λ′n}/(1 − e^{−λ′})`.
pub fn tail_bound(decay: &DecayEstimate, n: usize, phi_sup: f64, increment_sup: f64) -> f64 {
    phi_sup * increment_sup * decay.bound(n) / (1.0 - (-decay.lambda_prime).exp())
}

/// Smallest `n ≤ cap` with `tail_bound ≤ TAIL_TARGET`, or `cap`.
pub fn adaptive_terms(decay: &DecayEstimate, phi_sup: f64, increment_sup: f64, cap: usize) -> usize {
    (1..=cap)
        .find(|n| tail_bound(decay, *n, phi_sup, increment_sup) <= TAIL_TARGET)
        .unwrap_or(cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseOptions {
    /// Fixed number of series terms; adaptive when `None`.
    pub n_terms: Option<usize>,
    /// Largest number of terms the adaptive rule may choose.
    pub max_terms: usize,
    pub n_pullback: usize,
    /// Also evaluate the observable-side series.
    pub observable_side: bool,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        Self {
            n_terms: None,
            max_terms: 40,
            n_pullback: 60,
            observable_side: true,
        }
    }
}

impl ResponseOptions {
    /// Path half-width needed by these options.
    pub fn window(&self) -> usize {
        self.n_pullback + self.n_terms.unwrap_or(self.max_terms).max(self.max_terms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchedResponse {
    /// Pairing `ĥ_ω(φ)`.
    pub value: f64,
    /// Observable-side series, if requested.
    pub value_observable: Option<f64>,
    pub n_terms: usize,
    pub tail_bound: f64,
    /// Largest quadrature grid used by the observable side.
    pub observable_grid: usize,
    /// Some observable-side term needed more than [`OBSERVABLE_GRID_CAP`] points.
    pub observable_grid_capped: bool,
    /// `|value − value_observable| ≤ 10·tail_bound`.
    pub consistent: Option<bool>,
}

fn sup_on_grid(phi: &SpectralVector) -> f64 {
    let grid = (8 * phi.dim()).next_power_of_two();
    phi.eval_grid(grid)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// `∂_eps ∫ φ dh_ω^eps` at `eps = 0`.
pub fn quenched_response(
    cocycle: &Cocycle,
    path: &OmegaPath,
    phi: &SpectralVector,
    decay: &DecayEstimate,
    opts: &ResponseOptions,
) -> Result<QuenchedResponse> {
    if phi.order() != cocycle.order() {
        return Err(Error::OrderMismatch(phi.order(), cocycle.order()));
    }
    let available = (-path.lower()) as usize;
    if available <= opts.n_pullback {
        return Err(Error::InsufficientWindow {
            lower: path.lower(),
            upper: path.upper(),
            from: -(opts.n_pullback as isize) - 1,
            to: 0,
        });
    }
    let cap = opts.max_terms.min(available - opts.n_pullback);
    let phi_sup = sup_on_grid(phi);
    let n_terms = match opts.n_terms {
        Some(n) => n,
        None => {
            let probe = ResponseSweep::new(cocycle, path, cap, opts.n_pullback, 0)?;
            adaptive_terms(decay, phi_sup, probe.increment_sup(), cap)
        }
    };
    let sweep = ResponseSweep::new(cocycle, path, n_terms, opts.n_pullback, 0)?;
    let value = sweep.hat(0).pair(phi);
    let tail = tail_bound(decay, n_terms, phi_sup, sweep.increment_sup());
    let (value_observable, observable_grid, observable_grid_capped) = if opts.observable_side {
        let (v, grid, capped) = observable_series(cocycle, path, phi, &sweep, n_terms)?;
        (Some(v), grid, capped)
    } else {
        (None, 0, false)
    };
    let consistent = value_observable
        .map(|b| (value - b).abs() <= 10.0 * tail.max(CROSS_CHECK_FLOOR));
    Ok(QuenchedResponse {
        value,
        value_observable,
        n_terms,
        tail_bound: tail,
        observable_grid,
        observable_grid_capped,
        consistent,
    })
}

/// `Σ_{j<n_terms} ∫ φ(T^{(j+1)}(y)) (J h + v h′)(y) dy`, with the maps, `J`,
/// `v` and `h` of `σ^{-j-1}ω` followed by `T_{σ^{-j}ω}, …, T_{σ^{-1}ω}`.
fn observable_series(
    cocycle: &Cocycle,
    path: &OmegaPath,
    phi: &SpectralVector,
    sweep: &ResponseSweep,
    n_terms: usize,
) -> Result<(f64, usize, bool)> {
    let family = cocycle.family();
    let evaluator = PointEvaluator::new(phi);
    let base_grid = (16 * cocycle.discretization().dim()).next_power_of_two();
    let mut total = 0.0;
    let mut largest = 0;
    let mut capped = false;
    let mut growth = 1.0;
    for j in 0..n_terms {
        let start = -(j as isize) - 1;
        growth *= family.sup_derivative(path.symbol(start)?, 0.0)?;
        let band = evaluator.bandwidth() as f64 * growth
            + (cocycle.order() + family.perturbation_degree() + 4) as f64;
        let needed = (4.0 * band).min(2.0 * OBSERVABLE_GRID_CAP as f64) as usize;
        let mut grid = needed.next_power_of_two().max(base_grid);
        if grid > OBSERVABLE_GRID_CAP {
            grid = OBSERVABLE_GRID_CAP;
            capped = true;
        }
        largest = largest.max(grid);

        let h = sweep.density(start);
        let h_vals = h.eval_grid_complex(grid, 0);
        let dh_vals = h.eval_grid_complex(grid, 1);
        let symbols: Vec<_> = (start..0).map(|k| path.symbol(k)).collect::<Result<_>>()?;
        let chunks = grid.div_ceil(CHUNK);
        let partial = par_map(chunks, |c| {
            let mut acc = 0.0;
            for m in c * CHUNK..((c + 1) * CHUNK).min(grid) {
                let y = m as f64 / grid as f64;
                let jet = family.raw_jet(symbols[0], 0.0, y);
                let w = weight_from_jet(&jet);
                let density = w.j * h_vals[m].re + w.v * dh_vals[m].re;
                let mut z = jet.image.rem_euclid(1.0);
                for s in &symbols[1..] {
                    z = family.lift(*s, 0.0, z).rem_euclid(1.0);
                }
                acc += evaluator.eval(z) * density;
            }
            acc
        });
        total += partial.iter().sum::<f64>() / grid as f64;
    }
    Ok((total, largest, capped))
}

/// Step and pullback settings for finite-difference oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifference {
    pub step: f64,
    pub n_pullback: usize,
    pub tol: f64,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self {
            step: 1e-3,
            n_pullback: 60,
            tol: 1e-12,
        }
    }
}

/// Central difference of `∫ φ dh_ω^eps` over `±step` and `±step/2`, combined
/// by one Richardson step.
pub fn finite_difference_response(
    cocycle: &Cocycle,
    path: &OmegaPath,
    phi: &SpectralVector,
    fd: &FiniteDifference,
) -> Result<f64> {
    let (n, tol, step) = (fd.n_pullback, fd.tol, fd.step);
    let central = |e: f64| -> Result<f64> {
        let plus = pullback_density(cocycle, path, e, n, tol)?;
        let minus = pullback_density(cocycle, path, -e, n, tol)?;
        Ok((plus.density.pair(phi) - minus.density.pair(phi)) / (2.0 * e))
    };
    let coarse = central(step)?;
    let fine = central(0.5 * step)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealedResponse {
    pub value: f64,
    pub stderr: f64,
    pub per_path: Vec<f64>,
    pub method: ResponseMethod,
    /// Largest tail bound over paths (zero for finite differences).
    pub tail_bound: f64,
    pub n_terms_max: usize,
}

/// Monte Carlo average over `samples` paths of `ĥ_ω(F_ω)`.
pub fn annealed_response(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    observable: &Observable,
    samples: usize,
    decay: &DecayEstimate,
    opts: &ResponseOptions,
) -> Result<AnnealedResponse> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let results = try_par_map(samples, |i| -> Result<QuenchedResponse> {
        let path = sample_path(driving, opts.window(), i as u64)?;
        let phi = observable.spectral(path.symbol(0)?, cocycle.order())?;
        quenched_response(cocycle, &path, &phi, decay, opts)
    })?;
    let per_path: Vec<f64> = results.iter().map(|r| r.value).collect();
    let (value, stderr) = mean_stderr(&per_path);
    Ok(AnnealedResponse {
        value,
        stderr,
        per_path,
        method: ResponseMethod::SeriesHatH,
        tail_bound: results.iter().map(|r| r.tail_bound).fold(0.0, f64::max),
        n_terms_max: results.iter().map(|r| r.n_terms).max().unwrap_or(0),
    })
}

/// Paired finite-difference estimate of `∂_eps R(eps, F)` on the same paths
/// as [`annealed_response`].
pub fn annealed_finite_difference(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    observable: &Observable,
    samples: usize,
    window: usize,
    fd: &FiniteDifference,
) -> Result<AnnealedResponse> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let per_path = try_par_map(samples, |i| -> Result<f64> {
        let path = sample_path(driving, window, i as u64)?;
        let phi = observable.spectral(path.symbol(0)?, cocycle.order())?;
        finite_difference_response(cocycle, &path, &phi, fd)
    })?;
    let (value, stderr) = mean_stderr(&per_path);
    Ok(AnnealedResponse {
        value,
        stderr,
        per_path,
        method: ResponseMethod::FiniteDifference,
        tail_bound: 0.0,
        n_terms_max: 0,
    })
}
