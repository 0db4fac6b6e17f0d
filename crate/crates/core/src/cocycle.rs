//! Driving systems, sampled ω-windows and composition of operator cocycles.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::maps::{MapFamily, Symbol, PHASE_GRID};
use crate::spectral::{
    assemble_derivative, assemble_transfer, h_weight_sq, norm, Discretization, OperatorKind,
    Space, SpectralVector, TransferMatrix,
};

/// Golden-mean rotation number `(√5 − 1)/2`.
pub const GOLDEN_ROTATION: f64 = 0.618_033_988_749_894_8;

/// Floor applied to norm ratios before taking logarithms.
pub const DECAY_FLOOR: f64 = 1e-15;

/// Ratios below this level are round-off; the decay fit stops there.
const DECAY_NOISE: f64 = 1e-12;

/// Offset so that negative path positions map to non-negative counters.
const POSITION_OFFSET: i128 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DrivingKind {
    Bernoulli { probabilities: Vec<f64> },
    Rotation { alpha: f64 },
}

/// Base dynamics `σ` on `Ω` together with the seed of its sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingSystem {
    pub kind: DrivingKind,
    pub seed: u64,
}

impl DrivingSystem {
    pub fn bernoulli(probabilities: Vec<f64>, seed: u64) -> Result<Self> {
        let d = Self {
            kind: DrivingKind::Bernoulli { probabilities },
            seed,
        };
        d.validate()?;
        Ok(d)
    }

    /// Single-symbol Bernoulli shift: every path is constant.
    pub fn deterministic(seed: u64) -> Self {
        Self {
            kind: DrivingKind::Bernoulli {
                probabilities: vec![1.0],
            },
            seed,
        }
    }

    pub fn rotation(alpha: f64, seed: u64) -> Result<Self> {
        let d = Self {
            kind: DrivingKind::Rotation { alpha },
            seed,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DrivingKind::Bernoulli { probabilities } => {
                if probabilities.is_empty() || probabilities.iter().any(|p| !(*p > 0.0)) {
                    return Err(Error::InvalidDriving(
                        "probabilities must be positive".into(),
                    ));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidDriving(format!(
                        "probabilities sum to {total}, expected 1"
                    )));
                }
            }
            DrivingKind::Rotation { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidDriving(format!(
                        "rotation number {alpha} not in (0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of distinct letters, or `None` for rotation driving.
    pub fn alphabet_size(&self) -> Option<usize> {
        match &self.kind {
            DrivingKind::Bernoulli { probabilities } => Some(probabilities.len()),
            DrivingKind::Rotation { .. } => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.alphabet_size() == Some(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub draw: u64,
}

/// Finite window `(σ^k ω)_{lower ≤ k ≤ upper}` of a driving orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaPath {
    symbols: Vec<Symbol>,
    origin: usize,
    provenance: Provenance,
    quantization_error: f64,
}

impl OmegaPath {
    /// Path repeating a single symbol on `-half_width ..= half_width`.
    pub fn constant(symbol: Symbol, half_width: usize) -> Self {
        Self {
            symbols: vec![symbol; 2 * half_width + 1],
            origin: half_width,
            provenance: Provenance { seed: 0, draw: 0 },
            quantization_error: 0.0,
        }
    }

    pub fn from_symbols(symbols: Vec<Symbol>, origin: usize) -> Result<Self> {
        if origin >= symbols.len() {
            return Err(Error::InvalidArgument("origin outside the window".into()));
        }
        Ok(Self {
            symbols,
            origin,
            provenance: Provenance { seed: 0, draw: 0 },
            quantization_error: 0.0,
        })
    }

    pub fn lower(&self) -> isize {
        -(self.origin as isize)
    }

    pub fn upper(&self) -> isize {
        (self.symbols.len() - 1 - self.origin) as isize
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Largest distance between a rotation point and its grid representative.
    pub fn quantization_error(&self) -> f64 {
        self.quantization_error
    }

    /// Symbol of `σ^k ω`.
    pub fn symbol(&self, k: isize) -> Result<Symbol> {
        self.covers(k, k)?;
        Ok(self.symbols[(k + self.origin as isize) as usize])
    }

    pub fn covers(&self, from: isize, to: isize) -> Result<()> {
        if from < self.lower() || to > self.upper() {
            return Err(Error::InsufficientWindow {
                lower: self.lower(),
                upper: self.upper(),
                from,
                to,
            });
        }
        Ok(())
    }

    /// The window seen from `σω`: position `k` of the result is position
    /// `k + 1` of `self`.
    pub fn shifted(&self) -> Result<Self> {
        if self.upper() < 1 {
            return Err(Error::InsufficientWindow {
                lower: self.lower(),
                upper: self.upper(),
                from: 1,
                to: 1,
            });
        }
        let mut out = self.clone();
        out.origin += 1;
        Ok(out)
    }
}

/// Deterministic sample of the window `-half_width ..= half_width` for
/// `(seed, draw)`. Bernoulli symbols come from a counter-based ChaCha stream
/// indexed by position, so windows of different sizes agree where they overlap.
pub fn sample_path(driving: &DrivingSystem, half_width: usize, draw: u64) -> Result<OmegaPath> {
    driving.validate()?;
    let w = half_width as isize;
    let mut quantization_error: f64 = 0.0;
    let symbols: Vec<Symbol> = match &driving.kind {
        DrivingKind::Bernoulli { probabilities } => {
            let mut cumulative = Vec::with_capacity(probabilities.len());
            let mut acc = 0.0;
            for p in probabilities {
                acc += p;
                cumulative.push(acc);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(driving.seed);
            rng.set_stream(draw);
            (-w..=w)
                .map(|k| {
                    if probabilities.len() == 1 {
                        return Symbol::Letter(0);
                    }
                    rng.set_word_pos(((k as i128 + POSITION_OFFSET) * 2) as u128);
                    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                    let letter = cumulative
                        .iter()
                        .position(|c| u < *c)
                        .unwrap_or(probabilities.len() - 1);
                    Symbol::Letter(letter)
                })
                .collect()
        }
        DrivingKind::Rotation { alpha } => {
            let omega0 = rotation_base_point(driving.seed, draw);
            (-w..=w)
                .map(|k| {
                    let omega = (omega0 + k as f64 * alpha).rem_euclid(1.0);
                    let s = Symbol::phase_from(omega);
                    let mut err = (s.phase_value() - omega).abs();
                    err = err.min(1.0 - err);
                    quantization_error = quantization_error.max(err);
                    s
                })
                .collect()
        }
    };
    Ok(OmegaPath {
        symbols,
        origin: half_width,
        provenance: Provenance {
            seed: driving.seed,
            draw,
        },
        quantization_error,
    })
}

/// Stratified low-discrepancy base point: a seed-dependent offset advanced
/// by the additive recurrence with step `√2 − 1`.
fn rotation_base_point(seed: u64, draw: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (offset + draw as f64 * (std::f64::consts::SQRT_2 - 1.0)).rem_euclid(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    symbol: Symbol,
    eps_bits: u64,
    kind: OperatorKind,
}

/// Cached Galerkin operator of one fibre; rotation-driven symbols share the
/// phase-zero matrix and apply their rotation as a diagonal twist.
#[derive(Debug, Clone)]
pub struct Operator {
    matrix: Arc<TransferMatrix>,
    shift: f64,
}

impl Operator {
    pub fn apply(&self, v: &SpectralVector) -> SpectralVector {
        let mut out = self.matrix.apply(v);
        if self.shift != 0.0 {
            let n = out.order() as i64;
            for j in -n..=n {
                let c = out.coeff(j) * Complex64::from_polar(1.0, -TAU * j as f64 * self.shift);
                out.set(j, c);
            }
        }
        out
    }

    pub fn kind(&self) -> OperatorKind {
        self.matrix.kind
    }

    /// Full matrix including the post-rotation.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let mut m = self.matrix.matrix.clone();
        if self.shift != 0.0 {
            let n = self.matrix.order as i64;
            for j in -n..=n {
                let rot = Complex64::from_polar(1.0, -TAU * j as f64 * self.shift);
                for c in m.row_mut((j + n) as usize).iter_mut() {
                    *c *= rot;
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Compose `L_{σ^{-1}ω} ∘ … ∘ L_{σ^{-n}ω}`; the result lives over `ω`.
    FromPast,
    /// Compose `L_{σ^{n-1}ω} ∘ … ∘ L_ω`; the result lives over `σ^n ω`.
    FromPresent,
}

/// A map family with its discretization and a shared operator cache.
#[derive(Debug)]
pub struct Cocycle {
    family: MapFamily,
    disc: Discretization,
    cache: RwLock<HashMap<CacheKey, Arc<TransferMatrix>>>,
}

impl Clone for Cocycle {
    fn clone(&self) -> Self {
        Self::new(self.family.clone(), self.disc)
    }
}

impl Cocycle {
    pub fn new(family: MapFamily, disc: Discretization) -> Self {
        Self {
            family,
            disc,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn order(&self) -> usize {
        self.disc.order
    }

    pub fn cached_operators(&self) -> usize {
        self.cache.read().expect("operator cache poisoned").len()
    }

    fn get(&self, symbol: Symbol, eps: f64, kind: OperatorKind) -> Result<Operator> {
        let (base, shift) = match symbol {
            Symbol::Phase(_) => (Symbol::Letter(0), self.family.post_rotation(symbol)),
            s => (s, 0.0),
        };
        // validates symbol and eps even on cache hits
        self.family.map_jet(base, eps, 0.0)?;
        let key = CacheKey {
            symbol: base,
            eps_bits: (eps + 0.0).to_bits(),
            kind,
        };
        if let Some(m) = self.cache.read().expect("operator cache poisoned").get(&key) {
            return Ok(Operator {
                matrix: Arc::clone(m),
                shift,
            });
        }
        let matrix = Arc::new(match kind {
            OperatorKind::Transfer => assemble_transfer(&self.family, base, eps, &self.disc)?,
            OperatorKind::Derivative => assemble_derivative(&self.family, base, &self.disc)?,
        });
        let mut cache = self.cache.write().expect("operator cache poisoned");
        let entry = cache.entry(key).or_insert(matrix);
        Ok(Operator {
            matrix: Arc::clone(entry),
            shift,
        })
    }

    pub fn transfer(&self, symbol: Symbol, eps: f64) -> Result<Operator> {
        self.get(symbol, eps, OperatorKind::Transfer)
    }

    pub fn derivative(&self, symbol: Symbol) -> Result<Operator> {
        self.get(symbol, 0.0, OperatorKind::Derivative)
    }

    /// Applies `L_{σ^{from+steps-1}ω} ∘ … ∘ L_{σ^{from}ω}` to `v`.
    pub fn forward(
        &self,
        path: &OmegaPath,
        eps: f64,
        from: isize,
        steps: usize,
        v: &SpectralVector,
    ) -> Result<SpectralVector> {
        if steps == 0 {
            return Ok(v.clone());
        }
        path.covers(from, from + steps as isize - 1)?;
        let mut out = v.clone();
        for k in from..from + steps as isize {
            out = self.transfer(path.symbol(k)?, eps)?.apply(&out);
        }
        Ok(out)
    }

    /// `L^n` along `path` in the requested direction.
    pub fn cocycle_apply(
        &self,
        path: &OmegaPath,
        eps: f64,
        n: usize,
        v: &SpectralVector,
        direction: Direction,
    ) -> Result<SpectralVector> {
        match direction {
            Direction::FromPast => self.forward(path, eps, -(n as isize), n, v),
            Direction::FromPresent => self.forward(path, eps, 0, n, v),
        }
    }
}

/// Fitted uniform decay `‖L^n v‖_s ≤ D′ e^{-λ′n} ‖v‖_s` on mean-zero vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub d_prime: f64,
    pub lambda_prime: f64,
    /// RMS residual of the least-squares fit in log space.
    pub residual: f64,
    /// `r_n` for `n = 0 ..= n_max` (with `r_0 = 1`), floored at [`DECAY_FLOOR`].
    pub ratios: Vec<f64>,
}

impl DecayEstimate {
    pub fn bound(&self, n: usize) -> f64 {
        self.d_prime * (-self.lambda_prime * n as f64).exp()
    }
}

/// Real mean-zero test vectors `cos 2πkx`, `sin 2πkx`, `k = 1..=4`.
pub fn decay_test_vectors(order: usize) -> Vec<SpectralVector> {
    let mut out = Vec::new();
    for k in 1..=4i64.min(order as i64) {
        let mut c = SpectralVector::zeros(order);
        c.set(k, Complex64::new(0.5, 0.0));
        c.set(-k, Complex64::new(0.5, 0.0));
        let mut s = SpectralVector::zeros(order);
        s.set(k, Complex64::new(0.0, -0.5));
        s.set(-k, Complex64::new(0.0, 0.5));
        out.push(c);
        out.push(s);
    }
    out
}

/// Worst-case ratio `max ‖L^n_ω v‖_s / ‖v‖_s` over sampled paths and the
/// mean-zero test vectors, followed by a log-linear fit on the tail half.
pub fn estimate_decay(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    eps: f64,
    samples: usize,
    n_max: usize,
) -> Result<DecayEstimate> {
    if samples == 0 || n_max == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sample and one step".into(),
        ));
    }
    let tests = decay_test_vectors(cocycle.order());
    let per_sample = crate::exec::try_par_map(samples, |i| -> Result<Vec<f64>> {
        let path = sample_path(driving, n_max, i as u64)?;
        let mut ratios = vec![0.0_f64; n_max + 1];
        for v in &tests {
            let v_norm = norm(v, Space::Bs);
            let mut cur = v.clone();
            for (n, r) in ratios.iter_mut().enumerate().skip(1) {
                cur = cocycle.transfer(path.symbol(n as isize - 1)?, eps)?.apply(&cur);
                *r = r.max(norm(&cur, Space::Bs) / v_norm);
            }
        }
        Ok(ratios)
    })?;
    let mut ratios = vec![0.0_f64; n_max + 1];
    for sample in &per_sample {
        for (r, s) in ratios.iter_mut().zip(sample) {
            *r = r.max(*s);
        }
    }
    ratios[0] = 1.0;
    for r in ratios.iter_mut() {
        *r = r.max(DECAY_FLOOR);
    }
    fit_decay(ratios)
}

fn fit_decay(ratios: Vec<f64>) -> Result<DecayEstimate> {
    let n_max = ratios.len() - 1;
    let first_floor = ratios.iter().position(|r| *r <= DECAY_NOISE);
    let end = first_floor.unwrap_or(n_max);
    // tail half of the range that is still above round-off
    let start = if end >= 2 { end.div_ceil(2).min(end - 1) } else { 0 };
    let xs: Vec<f64> = (start..=end).map(|n| n as f64).collect();
    let ys: Vec<f64> = (start..=end).map(|n| ratios[n].ln()).collect();
    let fit = crate::stats::linear_fit(&xs, &ys);
    if fit.slope >= 0.0 {
        return Err(Error::NoDecay { slope: fit.slope });
    }
    let lambda_prime = -fit.slope;
    // floored ratios carry no information about the constant
    let d_prime = ratios[..=end]
        .iter()
        .enumerate()
        .map(|(n, r)| r * (lambda_prime * n as f64).exp())
        .fold(0.0, f64::max);
    Ok(DecayEstimate {
        d_prime,
        lambda_prime,
        residual: fit.rms_residual,
        ratios,
    })
}

/// Diagonal `H^2` weights used to measure operator norms on `B_s`.
fn strong_weights(order: usize) -> Vec<f64> {
    let n = order as i64;
    (-n..=n).map(|k| h_weight_sq(k, 2).sqrt()).collect()
}

/// `log ‖L^k_{σ^{from}ω}‖` for `k = 0 ..= steps`, in the `H^2` operator norm
/// (coefficient-weighted spectral norm), accumulated with per-step rescaling.
pub fn log_norm_profile(
    cocycle: &Cocycle,
    path: &OmegaPath,
    eps: f64,
    from: isize,
    steps: usize,
) -> Result<Vec<f64>> {
    path.covers(from, from + steps as isize - 1)?;
    let dim = cocycle.disc.dim();
    let w = strong_weights(cocycle.order());
    let mut product = DMatrix::<Complex64>::identity(dim, dim);
    let mut log_scale = 0.0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(0.0);
    for k in from..from + steps as isize {
        let mut m = cocycle.transfer(path.symbol(k)?, eps)?.to_matrix();
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] *= w[r] / w[c];
            }
        }
        product = m * product;
        let f = product.norm();
        product /= Complex64::new(f, 0.0);
        log_scale += f.ln();
        out.push(log_scale + spectral_norm(&product).ln());
    }
    Ok(out)
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Finite-time top Lyapunov exponent `(1/n) log ‖L^n_{ω,eps}‖_s`.
pub fn lyapunov_top(cocycle: &Cocycle, path: &OmegaPath, eps: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("need n >= 1".into()));
    }
    let profile = log_norm_profile(cocycle, path, eps, 0, n)?;
    Ok(profile[n] / n as f64)
}

/// Phase-grid resolution, exposed for reporting.
pub fn phase_resolution() -> f64 {
    1.0 / PHASE_GRID as f64
}

/// Independent samples of paths, in draw order.
pub fn sample_paths(
    driving: &DrivingSystem,
    half_width: usize,
    samples: usize,
) -> Result<Vec<OmegaPath>> {
    par_map(samples, |i| sample_path(driving, half_width, i as u64))
        .into_iter()
        .collect()
}
