//! Variance of the quenched central limit theorem, its derivative in `eps`,
//! and an empirical check by orbit simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::{sample_path, Cocycle, DrivingSystem, OmegaPath};
use crate::equivariant::density_sweep;
use crate::error::{Error, Result};
use crate::exec::{par_map, try_par_map};
use crate::maps::{MapFamily, Symbol};
use crate::observable::Observable;
use crate::response::ResponseSweep;
use crate::spectral::SpectralVector;
use crate::stats::{ks_normal, mean_stderr};

/// Values of `Σ²` below this are treated as a degenerate limit law.
pub const DEGENERATE_SIGMA2: f64 = 1e-6;

/// Grid used for inverse-CDF sampling of a density.
pub const CDF_GRID: usize = 1 << 14;

/// Scale of the uniform dither added to simulated orbits.
pub const DITHER: f64 = 1.0 / (1u64 << 50) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceOptions {
    pub samples: usize,
    pub n_corr: usize,
    pub n_pullback: usize,
    /// Response-series length used by the derivative.
    pub n_terms: usize,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            n_corr: 30,
            n_pullback: 60,
            n_terms: 30,
        }
    }
}

impl VarianceOptions {
    pub fn window(&self) -> usize {
        self.n_pullback + self.n_terms + self.n_corr + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceResult {
    pub eps: f64,
    pub sigma2: f64,
    pub stderr: f64,
    pub n_corr: usize,
    pub samples: usize,
    /// Path-averaged `h(f²)` followed by the correlation terms `n = 1..=n_corr`.
    pub terms: Vec<f64>,
    pub per_path: Vec<f64>,
    /// Largest `|h_ω(f_ω)|` over paths.
    pub centering_defect: f64,
}

fn centered(
    observable: &Observable,
    symbol: Symbol,
    h: &SpectralVector,
) -> Result<(SpectralVector, f64)> {
    let f = observable.spectral(symbol, h.order())?;
    let mean = h.pair(&f);
    let mut out = f;
    out.set(0, out.coeff(0) - mean);
    Ok((out, mean))
}

struct PathVariance {
    terms: Vec<f64>,
    centering_defect: f64,
}

fn path_variance(
    cocycle: &Cocycle,
    path: &OmegaPath,
    observable: &Observable,
    eps: f64,
    n_corr: usize,
    n_pullback: usize,
) -> Result<PathVariance> {
    let h = density_sweep(cocycle, path, eps, 0, n_corr as isize, n_pullback)?;
    let mut f = Vec::with_capacity(n_corr + 1);
    let mut centering_defect: f64 = 0.0;
    for (k, hk) in h.iter().enumerate() {
        let (fk, _) = centered(observable, path.symbol(k as isize)?, hk)?;
        centering_defect = centering_defect.max(hk.pair(&fk).abs());
        f.push(fk);
    }
    let mut u = f[0].product(&h[0]);
    let mut terms = Vec::with_capacity(n_corr + 1);
    terms.push(u.pair(&f[0]));
    for (n, fk) in f.iter().enumerate().skip(1) {
        u = cocycle.transfer(path.symbol(n as isize - 1)?, eps)?.apply(&u);
        terms.push(u.pair(fk));
    }
    Ok(PathVariance {
        terms,
        centering_defect,
    })
}

/// `Σ²_eps = E[h(f²)] + 2 Σ_{n=1}^{n_corr} E[⟨f_{σⁿω}, Lⁿ(f_ω h_ω)⟩]`.
pub fn sigma2(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    observable: &Observable,
    eps: f64,
    opts: &VarianceOptions,
) -> Result<VarianceResult> {
    sigma2_batch(cocycle, driving, observable, eps, opts, 0)
}

/// As [`sigma2`] but using draws `first_draw .. first_draw + samples`.
pub fn sigma2_batch(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    observable: &Observable,
    eps: f64,
    opts: &VarianceOptions,
    first_draw: u64,
) -> Result<VarianceResult> {
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let per = try_par_map(opts.samples, |i| {
        let path = sample_path(driving, opts.window(), first_draw + i as u64)?;
        path_variance(cocycle, &path, observable, eps, opts.n_corr, opts.n_pullback)
    })?;
    let per_path: Vec<f64> = per
        .iter()
        .map(|p| p.terms[0] + 2.0 * p.terms[1..].iter().sum::<f64>())
        .collect();
    let (sigma2, stderr) = mean_stderr(&per_path);
    let terms = (0..=opts.n_corr)
        .map(|n| per.iter().map(|p| p.terms[n]).sum::<f64>() / per.len() as f64)
        .collect();
    Ok(VarianceResult {
        eps,
        sigma2,
        stderr,
        n_corr: opts.n_corr,
        samples: opts.samples,
        terms,
        per_path,
        centering_defect: per.iter().map(|p| p.centering_defect).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceDerivative {
    pub value: f64,
    pub stderr: f64,
    /// Derivative of the zeroth term, `E[ĥ(f²)]`.
    pub zeroth: f64,
    /// Path averages of `Σ_n (I)_n`, `Σ_n (II)_n`, `Σ_n (III)_n`.
    pub sum_i: f64,
    pub sum_ii: f64,
    pub sum_iii: f64,
    /// Largest `|(I)_n|` over paths and `n`.
    pub max_term_i: f64,
    pub per_path: Vec<f64>,
}

struct PathDerivative {
    zeroth: f64,
    i: f64,
    ii: f64,
    iii: f64,
    max_i: f64,
}

fn path_derivative(
    cocycle: &Cocycle,
    path: &OmegaPath,
    observable: &Observable,
    opts: &VarianceOptions,
) -> Result<PathDerivative> {
    let n_corr = opts.n_corr as isize;
    let sweep = ResponseSweep::new(cocycle, path, opts.n_terms, opts.n_pullback, n_corr)?;
    let mut f = Vec::with_capacity(opts.n_corr + 1);
    let mut hat_means = Vec::with_capacity(opts.n_corr + 1);
    for k in 0..=n_corr {
        let (fk, _) = centered(observable, path.symbol(k)?, sweep.density(k))?;
        let raw = observable.spectral(path.symbol(k)?, cocycle.order())?;
        hat_means.push(sweep.hat(k).pair(&raw));
        f.push(fk);
    }
    let h0 = sweep.density(0);
    let hat0 = sweep.hat(0);
    let zeroth = hat0.pair(&f[0].product(&f[0]));

    let mut u = f[0].product(h0);
    let mut w = SpectralVector::zeros(cocycle.order());
    let mut z = h0.scaled(-hat_means[0]);
    z.axpy(1.0, &f[0].product(hat0));
    let (mut i_sum, mut ii_sum, mut iii_sum, mut max_i) = (0.0, 0.0, 0.0, 0.0_f64);
    for n in 1..=n_corr {
        let sym = path.symbol(n - 1)?;
        let l = cocycle.transfer(sym, 0.0)?;
        let mut w_next = l.apply(&w);
        w_next.axpy(1.0, &cocycle.derivative(sym)?.apply(&u));
        w = w_next;
        u = l.apply(&u);
        z = l.apply(&z);
        let fi = &f[n as usize];
        let term_i = -hat_means[n as usize] * u.mass();
        max_i = max_i.max(term_i.abs());
        i_sum += term_i;
        ii_sum += w.pair(fi);
        iii_sum += z.pair(fi);
    }
    Ok(PathDerivative {
        zeroth,
        i: i_sum,
        ii: ii_sum,
        iii: iii_sum,
        max_i,
    })
}

/// `dΣ²_eps/deps` at `eps = 0` assembled from the derivative of the zeroth
/// term and the limits of the three pieces of each correlation term.
pub fn sigma2_derivative(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    observable: &Observable,
    opts: &VarianceOptions,
) -> Result<VarianceDerivative> {
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let per = try_par_map(opts.samples, |i| {
        let path = sample_path(driving, opts.window(), i as u64)?;
        path_derivative(cocycle, &path, observable, opts)
    })?;
    let per_path: Vec<f64> = per
        .iter()
        .map(|p| p.zeroth + 2.0 * (p.i + p.ii + p.iii))
        .collect();
    let (value, stderr) = mean_stderr(&per_path);
    let mean = |g: fn(&PathDerivative) -> f64| per.iter().map(g).sum::<f64>() / per.len() as f64;
    Ok(VarianceDerivative {
        value,
        stderr,
        zeroth: mean(|p| p.zeroth),
        sum_i: mean(|p| p.i),
        sum_ii: mean(|p| p.ii),
        sum_iii: mean(|p| p.iii),
        max_term_i: per.iter().map(|p| p.max_i).fold(0.0, f64::max),
        per_path,
    })
}

/// Richardson-extrapolated central difference of `Σ²_eps` at `eps = 0`
/// over steps `step` and `step/2`, on common paths.
pub fn sigma2_finite_difference(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    observable: &Observable,
    step: f64,
    opts: &VarianceOptions,
) -> Result<(f64, f64)> {
    let at = |e: f64| sigma2(cocycle, driving, observable, e, opts);
    let central = |e: f64| -> Result<Vec<f64>> {
        let plus = at(e)?;
        let minus = at(-e)?;
        Ok(plus
            .per_path
            .iter()
            .zip(&minus.per_path)
            .map(|(p, m)| (p - m) / (2.0 * e))
            .collect())
    };
    let coarse = central(step)?;
    let fine = central(0.5 * step)?;
    let per_path: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    Ok(mean_stderr(&per_path))
}

/// Inverse-CDF sampler for a spectral density.
#[derive(Debug, Clone)]
pub struct DensitySampler {
    cdf: Vec<f64>,
}

impl DensitySampler {
    pub fn new(density: &SpectralVector) -> Self {
        let values: Vec<f64> = density
            .eval_grid(CDF_GRID)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        let mut cdf = Vec::with_capacity(CDF_GRID + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for m in 0..CDF_GRID {
            let next = values[(m + 1) % CDF_GRID];
            acc += 0.5 * (values[m] + next) / CDF_GRID as f64;
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Self { cdf }
    }

    /// Point `x` with `CDF(x) = u`, linear between grid nodes.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c <= u).clamp(1, CDF_GRID);
        let (lo, hi) = (self.cdf[i - 1], self.cdf[i]);
        let t = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        ((i - 1) as f64 + t) / CDF_GRID as f64
    }
}

/// One step `x ↦ T(x) + u·2^{-50} (mod 1)` of a simulated orbit. The dither
/// keeps binary round-off from collapsing orbits of maps like `2x` onto 0.
pub fn advance(family: &MapFamily, symbol: Symbol, eps: f64, x: f64, rng: &mut impl Rng) -> f64 {
    let dither: f64 = rng.random::<f64>() * DITHER;
    (family.lift(symbol, eps, x) + dither).rem_euclid(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    pub ks_stat: f64,
    pub sigma2_used: f64,
    /// `S_n/√n` for every trial.
    pub samples: Vec<f64>,
}

/// Kolmogorov–Smirnov distance between `S_n(f)/√n` along `path`, started
/// from `x ~ h_ω^eps`, and `N(0, Σ²)`.
#[allow(clippy::too_many_arguments)]
pub fn clt_empirical(
    cocycle: &Cocycle,
    observable: &Observable,
    eps: f64,
    path: &OmegaPath,
    n: usize,
    trials: usize,
    sigma2: f64,
    n_pullback: usize,
    seed: u64,
) -> Result<CltResult> {
    if !(sigma2 > DEGENERATE_SIGMA2) {
        return Err(Error::DegenerateVariance { sigma2 });
    }
    if n == 0 || trials == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and trials >= 1".into()));
    }
    path.covers(-(n_pullback as isize), n as isize - 1)?;
    let densities = density_sweep(cocycle, path, eps, 0, n as isize - 1, n_pullback)?;
    let symbols: Vec<Symbol> = (0..n as isize)
        .map(|k| path.symbol(k))
        .collect::<Result<_>>()?;
    let centering: Vec<f64> = densities
        .iter()
        .zip(&symbols)
        .map(|(h, s)| Ok(h.pair(&observable.spectral(*s, cocycle.order())?)))
        .collect::<Result<_>>()?;
    drop(densities);
    let sampler = DensitySampler::new(&density_sweep(cocycle, path, eps, 0, 0, n_pullback)?[0]);
    let family = cocycle.family();
    let components: Vec<_> = symbols
        .iter()
        .map(|s| observable.at(*s).cloned())
        .collect::<Result<_>>()?;
    let scale = 1.0 / (n as f64).sqrt();
    let samples = par_map(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut x = sampler.quantile(rng.random::<f64>());
        let mut sum = 0.0;
        for k in 0..n {
            sum += components[k].eval(x) - centering[k];
            x = advance(family, symbols[k], eps, x, &mut rng);
        }
        sum * scale
    });
    let ks_stat = ks_normal(&samples, sigma2.sqrt());
    Ok(CltResult {
        ks_stat,
        sigma2_used: sigma2,
        samples,
    })
}
