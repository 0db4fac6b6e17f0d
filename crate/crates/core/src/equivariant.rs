//! Equivariant densities as pullback limits and the statistical-stability
//! experiment.

use serde::{Deserialize, Serialize};

use crate::cocycle::{sample_path, Cocycle, DrivingSystem, OmegaPath};
use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::spectral::{h_norm, norm, Space, SpectralVector};
use crate::stats::{linear_fit, LinearFit};

/// Pullback approximation of `h_ω^eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantDensity {
    pub density: SpectralVector,
    pub eps: f64,
    /// Pullback depth `m` actually used.
    pub n_used: usize,
    /// Final successive-iterate gap in the `B_s` norm.
    pub residual: f64,
    pub converged: bool,
}

impl EquivariantDensity {
    /// Smallest value on a uniform grid of `grid` points.
    pub fn min_on_grid(&self, grid: usize) -> f64 {
        self.density
            .eval_grid(grid)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `L^m_{σ^{-m}ω,eps} 1` for the smallest `m ≤ n` whose successive gap in
/// `B_s` is at most `tol`.
pub fn pullback_density(
    cocycle: &Cocycle,
    path: &OmegaPath,
    eps: f64,
    n: usize,
    tol: f64,
) -> Result<EquivariantDensity> {
    pullback_density_at(cocycle, path, 0, eps, n, tol)
}

/// As [`pullback_density`] but for the fibre over `σ^k ω`.
pub fn pullback_density_at(
    cocycle: &Cocycle,
    path: &OmegaPath,
    k: isize,
    eps: f64,
    n: usize,
    tol: f64,
) -> Result<EquivariantDensity> {
    if !(tol > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(
            "pullback needs tol > 0 and n >= 1".into(),
        ));
    }
    path.covers(k - n as isize, k)?;
    let one = SpectralVector::constant(cocycle.order(), 1.0);
    let mut previous = one.clone();
    let mut residual = f64::INFINITY;
    for m in 1..=n {
        let current = cocycle.forward(path, eps, k - m as isize, m, &one)?;
        residual = norm(&(&current - &previous), Space::Bs);
        if residual <= tol || m == n {
            return Ok(EquivariantDensity {
                density: current,
                eps,
                n_used: m,
                residual,
                converged: residual <= tol,
            });
        }
        previous = current;
    }
    unreachable!("loop returns at m = n with residual {residual}")
}

/// Densities `h_{σ^k ω}` for `k = from ..= to`, obtained by one forward sweep
/// that starts from `1` at position `from − depth`.
pub fn density_sweep(
    cocycle: &Cocycle,
    path: &OmegaPath,
    eps: f64,
    from: isize,
    to: isize,
    depth: usize,
) -> Result<Vec<SpectralVector>> {
    if to < from {
        return Ok(Vec::new());
    }
    path.covers(from - depth as isize, to - 1)?;
    let one = SpectralVector::constant(cocycle.order(), 1.0);
    let mut h = cocycle.forward(path, eps, from - depth as isize, depth, &one)?;
    let mut out = Vec::with_capacity((to - from + 1) as usize);
    for k in from..to {
        let next = cocycle.transfer(path.symbol(k)?, eps)?.apply(&h);
        out.push(h);
        h = next;
    }
    out.push(h);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub eps: f64,
    pub path_id: u64,
    pub diff_w: f64,
    pub diff_h1: f64,
    pub residual: f64,
    pub n_used: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySup {
    pub eps: f64,
    pub sup_w: f64,
    pub sup_h1: f64,
    /// Same maximum over the first half of the samples.
    pub sup_w_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCurve {
    pub rows: Vec<StabilityRow>,
    pub sups: Vec<StabilitySup>,
    /// `log sup_w` against `log(|eps| |log |eps||)`.
    pub fit_eps_log: Option<LinearFit>,
    /// `log sup_w` against `log |eps|`.
    pub fit_eps: Option<LinearFit>,
    /// `log sup_h1` against `log |eps|`.
    pub fit_eps_h1: Option<LinearFit>,
    /// All differences vanish to round-off, so no exponent is fitted.
    pub degenerate: bool,
    /// The weak and `H^1` exponents differ by more than 0.1.
    pub norms_disagree: bool,
    /// Largest relative change of a sup when the sample count is doubled.
    pub sample_sensitivity: f64,
    pub all_converged: bool,
}

/// Differences below this are treated as exact zeros.
const DEGENERATE_DIFF: f64 = 1e-12;

/// `sup_ω ‖h_ω^eps − h_ω‖_w` over `samples` sampled paths for each eps.
pub fn stability_curve(
    cocycle: &Cocycle,
    driving: &DrivingSystem,
    eps_list: &[f64],
    samples: usize,
    n: usize,
    tol: f64,
) -> Result<StabilityCurve> {
    if eps_list.contains(&0.0) {
        return Err(Error::InvalidArgument("eps list must be nonzero".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let per_path = try_par_map(samples, |i| -> Result<Vec<StabilityRow>> {
        let path = sample_path(driving, n, i as u64)?;
        let base = pullback_density(cocycle, &path, 0.0, n, tol)?;
        eps_list
            .iter()
            .map(|&eps| {
                let pert = pullback_density(cocycle, &path, eps, n, tol)?;
                let diff = &pert.density - &base.density;
                Ok(StabilityRow {
                    eps,
                    path_id: i as u64,
                    diff_w: norm(&diff, Space::Bw),
                    diff_h1: h_norm(&diff, 1),
                    residual: pert.residual.max(base.residual),
                    n_used: pert.n_used.max(base.n_used),
                    converged: pert.converged && base.converged,
                })
            })
            .collect()
    })?;

    let half = samples.div_ceil(2);
    let sups: Vec<StabilitySup> = eps_list
        .iter()
        .enumerate()
        .map(|(e, &eps)| {
            let mut s = StabilitySup {
                eps,
                sup_w: 0.0,
                sup_h1: 0.0,
                sup_w_half: 0.0,
            };
            for (i, rows) in per_path.iter().enumerate() {
                let r = rows[e];
                s.sup_w = s.sup_w.max(r.diff_w);
                s.sup_h1 = s.sup_h1.max(r.diff_h1);
                if i < half {
                    s.sup_w_half = s.sup_w_half.max(r.diff_w);
                }
            }
            s
        })
        .collect();

    let degenerate = sups.iter().all(|s| s.sup_w <= DEGENERATE_DIFF);
    let fittable = !degenerate && sups.len() >= 2 && sups.iter().all(|s| s.sup_w > 0.0);
    let (fit_eps_log, fit_eps, fit_eps_h1) = if fittable {
        let ln_eps: Vec<f64> = sups.iter().map(|s| s.eps.abs().ln()).collect();
        let ln_eps_log: Vec<f64> = sups
            .iter()
            .map(|s| (s.eps.abs() * s.eps.abs().ln().abs()).ln())
            .collect();
        let ln_w: Vec<f64> = sups.iter().map(|s| s.sup_w.ln()).collect();
        let ln_h1: Vec<f64> = sups.iter().map(|s| s.sup_h1.ln()).collect();
        (
            Some(linear_fit(&ln_eps_log, &ln_w)),
            Some(linear_fit(&ln_eps, &ln_w)),
            Some(linear_fit(&ln_eps, &ln_h1)),
        )
    } else {
        (None, None, None)
    };
    let norms_disagree = match (fit_eps, fit_eps_h1) {
        (Some(w), Some(h)) => (w.slope - h.slope).abs() > 0.1,
        _ => false,
    };
    let sample_sensitivity = sups
        .iter()
        .filter(|s| s.sup_w > 0.0)
        .map(|s| (s.sup_w - s.sup_w_half) / s.sup_w)
        .fold(0.0, f64::max);
    let rows: Vec<StabilityRow> = per_path.into_iter().flatten().collect();
    let all_converged = rows.iter().all(|r| r.converged);
    Ok(StabilityCurve {
        rows,
        sups,
        fit_eps_log,
        fit_eps,
        fit_eps_h1,
        degenerate,
        norms_disagree,
        sample_sensitivity,
        all_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, MapFamily, PerturbationKind, Symbol, TrigPoly};
    use crate::spectral::Discretization;

    fn disc() -> Discretization {
        Discretization::new(24, 8).unwrap()
    }

    #[test]
    fn doubling_density_is_one_at_first_step() {
        let c = Cocycle::new(MapFamily::linear(2).unwrap(), disc());
        let path = OmegaPath::constant(Symbol::Letter(0), 10);
        let h = pullback_density(&c, &path, 0.0, 10, 1e-12).unwrap();
        // L1 = 1 up to quadrature round-off; halving the modes flushes that
        // noise out within log2(N) steps
        assert!(h.n_used <= 6, "{}", h.n_used);
        assert!(h.converged);
        assert!((&h.density - &SpectralVector::constant(24, 1.0)).max_abs() <= 1e-14);
    }

    #[test]
    fn drift_family_keeps_lebesgue() {
        let fam = MapFamily::new(
            PerturbationKind::Additive,
            vec![CircleMap::linear(3)],
            vec![TrigPoly::constant(1.0)],
            0.3,
        )
        .unwrap();
        let c = Cocycle::new(fam, disc());
        let path = OmegaPath::constant(Symbol::Letter(0), 10);
        for eps in [-0.2, 0.1, 0.3] {
            let h = pullback_density(&c, &path, eps, 10, 1e-12).unwrap();
            assert!((&h.density - &SpectralVector::constant(24, 1.0)).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn nonlinear_density_is_normalized_positive_and_equivariant() {
        let fam = MapFamily::new(
            PerturbationKind::Composed,
            vec![
                CircleMap::new(2, TrigPoly::sine(1, 0.1)),
                CircleMap::new(3, TrigPoly::cosine(1, 0.05)),
            ],
            vec![TrigPoly::sine(1, 0.2)],
            0.1,
        );
        // mixed degrees are rejected; use equal degrees
        assert!(fam.is_err());
        let fam = MapFamily::new(
            PerturbationKind::Composed,
            vec![
                CircleMap::new(2, TrigPoly::sine(1, 0.1)),
                CircleMap::new(2, TrigPoly::cosine(1, 0.05)),
            ],
            vec![TrigPoly::sine(1, 0.2)],
            0.1,
        )
        .unwrap();
        let c = Cocycle::new(fam, Discretization::new(48, 8).unwrap());
        let d = DrivingSystem::bernoulli(vec![0.5, 0.5], 4).unwrap();
        let path = sample_path(&d, 70, 2).unwrap();
        let h0 = pullback_density_at(&c, &path, 0, 0.05, 60, 1e-12).unwrap();
        let h1 = pullback_density_at(&c, &path, 1, 0.05, 60, 1e-12).unwrap();
        assert!(h0.converged && h1.converged);
        assert!((h0.density.mass() - 1.0).abs() <= 1e-13);
        assert!(h0.min_on_grid(1024) > -1e-8);
        let pushed = c.transfer(path.symbol(0).unwrap(), 0.05).unwrap().apply(&h0.density);
        let gap = norm(&(&pushed - &h1.density), Space::Bs);
        assert!(gap <= 10.0 * h0.residual.max(h1.residual).max(1e-13), "{gap}");
    }

    #[test]
    fn sweep_matches_pullback() {
        let fam = MapFamily::new(
            PerturbationKind::Composed,
            vec![
                CircleMap::new(2, TrigPoly::sine(1, 0.1)),
                CircleMap::new(2, TrigPoly::cosine(1, 0.05)),
            ],
            vec![TrigPoly::sine(1, 0.2)],
            0.1,
        )
        .unwrap();
        let c = Cocycle::new(fam, disc());
        let d = DrivingSystem::bernoulli(vec![0.5, 0.5], 4).unwrap();
        let path = sample_path(&d, 80, 0).unwrap();
        let sweep = density_sweep(&c, &path, 0.0, -5, 3, 60).unwrap();
        for (i, h) in sweep.iter().enumerate() {
            let p = pullback_density_at(&c, &path, -5 + i as isize, 0.0, 60, 1e-13).unwrap();
            assert!(norm(&(h - &p.density), Space::Bs) <= 1e-11);
        }
    }

    #[test]
    fn unconverged_pullback_is_flagged() {
        let fam = MapFamily::new(
            PerturbationKind::Composed,
            vec![CircleMap::new(2, TrigPoly::sine(1, 0.1))],
            vec![TrigPoly::sine(1, 0.2)],
            0.1,
        )
        .unwrap();
        let c = Cocycle::new(fam, disc());
        let path = OmegaPath::constant(Symbol::Letter(0), 10);
        let h = pullback_density(&c, &path, 0.0, 2, 1e-14).unwrap();
        assert!(!h.converged);
        assert_eq!(h.n_used, 2);
        assert!(pullback_density(&c, &path, 0.0, 11, 1e-14).is_err());
    }
}
