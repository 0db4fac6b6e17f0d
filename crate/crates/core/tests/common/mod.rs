//! Independent oracles shared by the integration tests. Nothing here goes
//! through the Galerkin matrices.

#![allow(dead_code)]

use quenched_core::cocycle::{sample_path, DrivingSystem, OmegaPath};
use quenched_core::maps::{CircleMap, MapFamily, PerturbationKind, Symbol, TrigPoly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `T(x) = 2x + 0.1 sin 2πx`.
pub fn sine_map(a: f64) -> CircleMap {
    CircleMap::new(2, TrigPoly::sine(1, a))
}

/// Two-symbol Bernoulli family used throughout the tests.
pub fn random_family() -> MapFamily {
    MapFamily::new(
        PerturbationKind::Composed,
        vec![
            sine_map(0.05),
            CircleMap::new(2, TrigPoly::new(0.25, vec![0.03], vec![0.0, 0.01])),
        ],
        vec![TrigPoly::sine(1, 0.1)],
        0.1,
    )
    .unwrap()
}

pub fn bernoulli(seed: u64) -> DrivingSystem {
    DrivingSystem::bernoulli(vec![0.5, 0.5], seed).unwrap()
}

/// `x ↦ 2x + 0.05 sin 2πx + ω + eps·0.1 sin 2πx` over a golden rotation.
pub fn rotation_family() -> MapFamily {
    MapFamily::with_phase_drift(
        PerturbationKind::Additive,
        vec![sine_map(0.05)],
        vec![TrigPoly::sine(1, 0.1)],
        0.1,
        1.0,
    )
    .unwrap()
}

/// Lift value of a single circle map without going through the library.
pub fn lift(map: &CircleMap, x: f64) -> f64 {
    map.degree as f64 * x + map.nonlinear.eval(x)
}

pub fn lift_prime(map: &CircleMap, x: f64) -> f64 {
    map.degree as f64 + map.nonlinear.jet(x)[1]
}

/// All preimages of `x` under an increasing degree-`d` lift `f`, by bisection.
pub fn preimages(f: impl Fn(f64) -> f64, degree: i64, x: f64) -> Vec<f64> {
    let base = f(0.0);
    (0..degree)
        .map(|b| {
            let mut target = x + b as f64;
            while target < base {
                target += degree as f64;
            }
            while target >= base + degree as f64 {
                target -= degree as f64;
            }
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Ulam approximation of the invariant density of one circle map: exact
/// preimage fractions of each bin, fixed vector by power iteration.
pub fn ulam_density(map: &CircleMap, bins: usize) -> Vec<f64> {
    let d = map.degree;
    let f = |x: f64| lift(map, x);
    // transitions[i] = list of (target bin, fraction of bin i landing there)
    let mut transitions: Vec<Vec<(usize, f64)>> = vec![Vec::new(); bins];
    let width = 1.0 / bins as f64;
    // preimages of every bin edge, sorted, split the circle into pieces
    // mapped monotonically into a single bin
    let mut cuts: Vec<(f64, usize)> = Vec::new();
    for e in 0..bins {
        for y in preimages(f, d, e as f64 * width) {
            cuts.push((y, e));
        }
    }
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = cuts.len();
    for c in 0..n {
        let (start, edge) = cuts[c];
        let end = if c + 1 < n { cuts[c + 1].0 } else { cuts[0].0 + 1.0 };
        let target = edge % bins;
        // split [start, end] across source bins
        let mut a = start;
        while a < end - 1e-18 {
            let bin = (a / width).floor();
            let b = ((bin + 1.0) * width).min(end);
            let src = (bin as i64).rem_euclid(bins as i64) as usize;
            transitions[src].push((target, (b - a) / width));
            a = b;
        }
    }
    let mut p = vec![1.0 / bins as f64; bins];
    for _ in 0..500 {
        let mut next = vec![0.0; bins];
        for (i, row) in transitions.iter().enumerate() {
            for (j, w) in row {
                next[*j] += p[i] * w;
            }
        }
        let total: f64 = next.iter().sum();
        let delta: f64 = next
            .iter()
            .zip(&p)
            .map(|(a, b)| (a / total - b).abs())
            .sum();
        p = next.into_iter().map(|v| v / total).collect();
        if delta < 1e-15 {
            break;
        }
    }
    p.into_iter().map(|v| v * bins as f64).collect()
}

/// Histogram (as a density) of a dithered orbit of one circle map.
pub fn orbit_histogram(map: &CircleMap, points: usize, bins: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: f64 = rng.random();
    for _ in 0..1000 {
        x = step(lift(map, x), &mut rng);
    }
    let mut counts = vec![0usize; bins];
    for _ in 0..points {
        x = step(lift(map, x), &mut rng);
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 * bins as f64 / points as f64)
        .collect()
}

fn step(y: f64, rng: &mut ChaCha8Rng) -> f64 {
    (y + rng.random::<f64>() * 2f64.powi(-50)).rem_euclid(1.0)
}

/// Bin averages of a function evaluated by midpoint refinement.
pub fn bin_averages(f: impl Fn(f64) -> f64, bins: usize, refine: usize) -> Vec<f64> {
    (0..bins)
        .map(|b| {
            (0..refine)
                .map(|r| f((b as f64 + (r as f64 + 0.5) / refine as f64) / bins as f64))
                .sum::<f64>()
                / refine as f64
        })
        .collect()
}

/// Pointwise `L_{T} φ(x) = Σ_{T y = x} φ(y) / T′(y)` for a single map given
/// by its lift and derivative.
pub fn branch_sum(
    f: &dyn Fn(f64) -> f64,
    fp: &dyn Fn(f64) -> f64,
    degree: i64,
    phi: &dyn Fn(f64) -> f64,
    x: f64,
) -> f64 {
    preimages(f, degree, x)
        .into_iter()
        .map(|y| phi(y) / fp(y).abs())
        .sum()
}

/// Within-path sample variances of `S_n(F)/√n`, one per path, from orbits
/// started at Lebesgue points pushed through `burn_in` past symbols.
pub fn orbit_variances(
    family: &MapFamily,
    driving: &DrivingSystem,
    f: impl Fn(f64) -> f64 + Sync,
    paths: usize,
    orbits: usize,
    n: usize,
    burn_in: usize,
) -> Vec<f64> {
    (0..paths)
        .map(|p| {
            let path: OmegaPath = sample_path(driving, n.max(burn_in) + 1, p as u64).unwrap();
            let symbols: Vec<Symbol> = (-(burn_in as isize)..n as isize)
                .map(|k| path.symbol(k).unwrap())
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + p as u64);
            let sums: Vec<f64> = (0..orbits)
                .map(|_| {
                    let mut x: f64 = rng.random();
                    let mut s = 0.0;
                    for (k, sym) in symbols.iter().enumerate() {
                        if k >= burn_in {
                            s += f(x);
                        }
                        x = step(family.lift(*sym, 0.0, x), &mut rng);
                    }
                    s / (n as f64).sqrt()
                })
                .collect();
            let mean = sums.iter().sum::<f64>() / orbits as f64;
            sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (orbits - 1) as f64
        })
        .collect()
}
