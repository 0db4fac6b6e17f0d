//! Parametrized random families of smooth expanding circle maps.
//!
//! Every map is a lift `B(x) = d·x + q(x)` with `q` a real trigonometric
//! polynomial of period 1, so all jets are closed-form and exact to machine
//! precision. Two ways of switching on the parameter `eps` are supported:
//!
//! * [`PerturbationKind::Composed`]: `T_eps = (Id + eps·S) ∘ B`,
//! * [`PerturbationKind::Additive`]: `T_eps = B + eps·p`.
//!
//! Rotation-driven symbols ([`Symbol::Phase`]) post-compose with the rigid
//! rotation `x ↦ x + drift·ω`, which keeps the transfer operator of every
//! phase a diagonal twist of the phase-zero operator.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid points used by the expansion certificate.
pub const CERTIFICATE_GRID: usize = 4096;

/// Resolution of the phase grid used for rotation-driven symbols.
pub const PHASE_GRID: u32 = 1 << 16;

/// Real trigonometric polynomial
/// `f(x) = c + Σ_m a_m cos(2πmx) + b_m sin(2πmx)`, `m = 1, 2, …`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { constant, cos, sin }
    }

    /// `amplitude · sin(2π·m·x)`
    pub fn sine(m: usize, amplitude: f64) -> Self {
        let mut sin = vec![0.0; m];
        sin[m - 1] = amplitude;
        Self::new(0.0, Vec::new(), sin)
    }

    /// `amplitude · cos(2π·m·x)`
    pub fn cosine(m: usize, amplitude: f64) -> Self {
        let mut cos = vec![0.0; m];
        cos[m - 1] = amplitude;
        Self::new(0.0, cos, Vec::new())
    }

    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
        last(&self.cos).max(last(&self.sin))
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.degree() == 0
    }

    /// Sum of the absolute values of all non-constant coefficients.
    pub fn oscillation_budget(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    /// Value and the first three derivatives at `x`.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        let mut out = [self.constant, 0.0, 0.0, 0.0];
        let n = self.cos.len().max(self.sin.len());
        for m in 1..=n {
            let a = self.cos.get(m - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(m - 1).copied().unwrap_or(0.0);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let w = TAU * m as f64;
            let (s, c) = (w * x).sin_cos();
            out[0] += a * c + b * s;
            out[1] += w * (-a * s + b * c);
            out[2] += w * w * (-a * c - b * s);
            out[3] += w * w * w * (a * s - b * c);
        }
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    /// Complex Fourier coefficient of index `k` (`f = Σ f_k e^{2πikx}`).
    pub fn fourier(&self, k: i64) -> num_complex::Complex64 {
        use num_complex::Complex64;
        if k == 0 {
            return Complex64::new(self.constant, 0.0);
        }
        let m = k.unsigned_abs() as usize;
        let a = self.cos.get(m - 1).copied().unwrap_or(0.0);
        let b = self.sin.get(m - 1).copied().unwrap_or(0.0);
        // a cos + b sin = (a - ib)/2 e^{+} + (a + ib)/2 e^{-}
        if k > 0 {
            Complex64::new(a / 2.0, -b / 2.0)
        } else {
            Complex64::new(a / 2.0, b / 2.0)
        }
    }
}

/// Base circle map `B(x) = d·x + q(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleMap {
    pub degree: i64,
    pub nonlinear: TrigPoly,
}

impl CircleMap {
    pub fn new(degree: i64, nonlinear: TrigPoly) -> Self {
        Self { degree, nonlinear }
    }

    pub fn linear(degree: i64) -> Self {
        Self::new(degree, TrigPoly::zero())
    }

    fn jet(&self, x: f64) -> [f64; 4] {
        let q = self.nonlinear.jet(x);
        [self.degree as f64 * x + q[0], self.degree as f64 + q[1], q[2], q[3]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    Composed,
    Additive,
}

/// Driving symbol selecting one fibre map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    /// Index into the family's list of base maps (Bernoulli driving).
    Letter(usize),
    /// Point `ω = index / 2^16` of the circle driving space (rotation driving).
    Phase(u16),
}

impl Symbol {
    pub fn phase_from(omega: f64) -> Self {
        let q = (omega.rem_euclid(1.0) * PHASE_GRID as f64).round() as u64 % PHASE_GRID as u64;
        Symbol::Phase(q as u16)
    }

    pub fn phase_value(&self) -> f64 {
        match self {
            Symbol::Letter(_) => 0.0,
            Symbol::Phase(q) => *q as f64 / PHASE_GRID as f64,
        }
    }
}

/// Pointwise jet of `T_{ω,eps}` at a circle point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapJet {
    pub x: f64,
    /// Image point reduced to `[0, 1)`.
    pub image: f64,
    /// `T′`
    pub tx: f64,
    /// `∂_eps T`
    pub te: f64,
    /// `∂_eps T′`
    pub txe: f64,
    /// `T″`
    pub txx: f64,
}

/// Transfer weight `g = 1/|T′|` together with the coefficients of the
/// derivative operator `φ ↦ J·φ + v·φ′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightJet {
    pub g: f64,
    pub j: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFamily {
    kind: PerturbationKind,
    base_maps: Vec<CircleMap>,
    /// One entry shared by all symbols, or one per symbol (additive only).
    perturbations: Vec<TrigPoly>,
    eps_max: f64,
    phase_drift: f64,
    expansion: f64,
}

impl MapFamily {
    pub fn new(
        kind: PerturbationKind,
        base_maps: Vec<CircleMap>,
        perturbations: Vec<TrigPoly>,
        eps_max: f64,
    ) -> Result<Self> {
        Self::with_phase_drift(kind, base_maps, perturbations, eps_max, 0.0)
    }

    pub fn with_phase_drift(
        kind: PerturbationKind,
        base_maps: Vec<CircleMap>,
        perturbations: Vec<TrigPoly>,
        eps_max: f64,
        phase_drift: f64,
    ) -> Result<Self> {
        if base_maps.is_empty() {
            return Err(Error::InvalidFamily("no base maps".into()));
        }
        let degree = base_maps[0].degree;
        if degree < 2 {
            return Err(Error::InvalidFamily(format!(
                "winding number must be >= 2, got {degree}"
            )));
        }
        if base_maps.iter().any(|m| m.degree != degree) {
            return Err(Error::InvalidFamily(
                "all symbols must share the same winding number".into(),
            ));
        }
        match (kind, perturbations.len()) {
            (_, 1) => {}
            (PerturbationKind::Additive, n) if n == base_maps.len() => {}
            (_, n) => {
                return Err(Error::InvalidFamily(format!(
                    "expected 1 perturbation{} but got {n}",
                    if kind == PerturbationKind::Additive {
                        format!(" or {}", base_maps.len())
                    } else {
                        String::new()
                    }
                )))
            }
        }
        if !(eps_max >= 0.0 && eps_max.is_finite()) {
            return Err(Error::InvalidFamily(format!("bad eps_max {eps_max}")));
        }
        if !phase_drift.is_finite() {
            return Err(Error::InvalidFamily("bad phase drift".into()));
        }
        let mut family = Self {
            kind,
            base_maps,
            perturbations,
            eps_max,
            phase_drift,
            expansion: 0.0,
        };
        let bound = family.expansion_certificate();
        if bound <= 1.0 {
            return Err(Error::NotExpanding { bound });
        }
        family.expansion = bound;
        Ok(family)
    }

    /// The doubling-type linear family `T(x) = d·x` with zero perturbation.
    pub fn linear(degree: i64) -> Result<Self> {
        Self::new(
            PerturbationKind::Additive,
            vec![CircleMap::linear(degree)],
            vec![TrigPoly::zero()],
            0.5,
        )
    }

    pub fn kind(&self) -> PerturbationKind {
        self.kind
    }

    pub fn base_maps(&self) -> &[CircleMap] {
        &self.base_maps
    }

    pub fn perturbations(&self) -> &[TrigPoly] {
        &self.perturbations
    }

    pub fn symbol_count(&self) -> usize {
        self.base_maps.len()
    }

    pub fn degree(&self) -> i64 {
        self.base_maps[0].degree
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn phase_drift(&self) -> f64 {
        self.phase_drift
    }

    /// Certified lower bound `λ` on `|T′|` over all symbols, points and `eps ∈ I`.
    pub fn expansion(&self) -> f64 {
        self.expansion
    }

    /// Largest Fourier degree among the perturbation fields.
    pub fn perturbation_degree(&self) -> usize {
        self.perturbations.iter().map(TrigPoly::degree).max().unwrap_or(0)
    }

    pub fn is_unperturbed(&self) -> bool {
        self.perturbations.iter().all(TrigPoly::is_zero)
    }

    fn check(&self, symbol: Symbol, eps: f64) -> Result<()> {
        if let Symbol::Letter(i) = symbol {
            if i >= self.base_maps.len() {
                return Err(Error::SymbolOutOfRange(i, self.base_maps.len()));
            }
        }
        if !(eps.abs() <= self.eps_max * (1.0 + 1e-12)) {
            return Err(Error::EpsOutOfRange {
                eps,
                eps_max: self.eps_max,
            });
        }
        Ok(())
    }

    fn parts(&self, symbol: Symbol) -> (&CircleMap, &TrigPoly, f64) {
        match symbol {
            Symbol::Letter(i) => {
                let p = if self.perturbations.len() == 1 {
                    &self.perturbations[0]
                } else {
                    &self.perturbations[i]
                };
                (&self.base_maps[i], p, 0.0)
            }
            Symbol::Phase(_) => (
                &self.base_maps[0],
                &self.perturbations[0],
                self.phase_drift * symbol.phase_value(),
            ),
        }
    }

    /// Rigid rotation applied after the fibre map for this symbol.
    pub fn post_rotation(&self, symbol: Symbol) -> f64 {
        self.parts(symbol).2
    }

    /// Unreduced lift and its jet; the caller has validated the inputs.
    pub(crate) fn raw_jet(&self, symbol: Symbol, eps: f64, x: f64) -> MapJet {
        let (base, pert, shift) = self.parts(symbol);
        let b = base.jet(x);
        let (lift, tx, te, txe, txx) = match self.kind {
            PerturbationKind::Composed => {
                let s = pert.jet(b[0]);
                (
                    b[0] + eps * s[0] + shift,
                    b[1] * (1.0 + eps * s[1]),
                    s[0],
                    s[1] * b[1],
                    b[2] * (1.0 + eps * s[1]) + eps * s[2] * b[1] * b[1],
                )
            }
            PerturbationKind::Additive => {
                let p = pert.jet(x);
                (
                    b[0] + eps * p[0] + shift,
                    b[1] + eps * p[1],
                    p[0],
                    p[1],
                    b[2] + eps * p[2],
                )
            }
        };
        MapJet {
            x,
            image: lift,
            tx,
            te,
            txe,
            txx,
        }
    }

    /// Exact jet of `T_{ω,eps}` at `x` (reduced modulo 1).
    pub fn map_jet(&self, symbol: Symbol, eps: f64, x: f64) -> Result<MapJet> {
        self.check(symbol, eps)?;
        let x = x.rem_euclid(1.0);
        let mut jet = self.raw_jet(symbol, eps, x);
        jet.image = jet.image.rem_euclid(1.0);
        Ok(jet)
    }

    /// Unreduced lift value `T(x)`; used by orbit simulation.
    pub fn lift(&self, symbol: Symbol, eps: f64, x: f64) -> f64 {
        let (base, pert, shift) = self.parts(symbol);
        let b = base.degree as f64 * x + base.nonlinear.eval(x);
        match self.kind {
            PerturbationKind::Composed => b + eps * pert.eval(b) + shift,
            PerturbationKind::Additive => b + eps * pert.eval(x) + shift,
        }
    }

    pub fn weight_jet(&self, symbol: Symbol, eps: f64, x: f64) -> Result<WeightJet> {
        let jet = self.map_jet(symbol, eps, x)?;
        Ok(weight_from_jet(&jet))
    }

    /// The `d` points `y` with `T_{ω,eps}(y) ≡ x (mod 1)`, sorted in `[0, 1)`.
    pub fn branch_preimages(&self, symbol: Symbol, eps: f64, x: f64) -> Result<Vec<f64>> {
        self.check(symbol, eps)?;
        let x = x.rem_euclid(1.0);
        let d = self.degree();
        let start = self.raw_jet(symbol, eps, 0.0).image;
        let first = (start - x).ceil() as i64;
        let mut out = Vec::with_capacity(d as usize);
        for m in first..first + d {
            let target = x + m as f64;
            out.push(self.solve_branch(symbol, eps, target)?.rem_euclid(1.0));
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    fn solve_branch(&self, symbol: Symbol, eps: f64, target: f64) -> Result<f64> {
        // lift is increasing on [0, 1] with lift(1) = lift(0) + d
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if self.raw_jet(symbol, eps, mid).image < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut y = 0.5 * (lo + hi);
        for _ in 0..50 {
            let jet = self.raw_jet(symbol, eps, y);
            let r = jet.image - target;
            if r.abs() <= 1e-15 * target.abs().max(1.0) {
                return Ok(y);
            }
            let step = r / jet.tx;
            y -= step;
            if step.abs() <= 1e-17 {
                break;
            }
        }
        let r = self.raw_jet(symbol, eps, y).image - target;
        if r.abs() <= 1e-13 {
            Ok(y)
        } else {
            Err(Error::PreimageNotConverged { x: target })
        }
    }

    /// Grid estimate of `sup |T′_{ω,eps}|`.
    pub fn sup_derivative(&self, symbol: Symbol, eps: f64) -> Result<f64> {
        self.check(symbol, eps)?;
        let h = 1.0 / CERTIFICATE_GRID as f64;
        Ok((0..CERTIFICATE_GRID)
            .map(|m| self.raw_jet(symbol, eps, m as f64 * h).tx.abs())
            .fold(0.0, f64::max))
    }

    /// Lipschitz-corrected grid lower bound on `inf |T′|` over all symbols and
    /// `eps ∈ {-eps_max, 0, eps_max}`; `T′` is affine in `eps`, so the endpoints
    /// bound the whole interval.
    fn expansion_certificate(&self) -> f64 {
        let h = 1.0 / CERTIFICATE_GRID as f64;
        let mut bound = f64::INFINITY;
        for i in 0..self.base_maps.len() {
            for &eps in &[-self.eps_max, 0.0, self.eps_max] {
                let mut min_tx = f64::INFINITY;
                let mut max_txx: f64 = 0.0;
                for m in 0..CERTIFICATE_GRID {
                    let jet = self.raw_jet(Symbol::Letter(i), eps, m as f64 * h);
                    min_tx = min_tx.min(jet.tx);
                    max_txx = max_txx.max(jet.txx.abs());
                }
                bound = bound.min(min_tx - max_txx * 0.5 * h);
            }
        }
        bound
    }
}

/// `g = 1/|T′|`, `v = -∂_eps T / T′`, `J = (∂_eps g + v·g′)/g = v′`.
pub fn weight_from_jet(jet: &MapJet) -> WeightJet {
    let g = 1.0 / jet.tx.abs();
    let v = -jet.te / jet.tx;
    let j = (jet.te * jet.txx - jet.txe * jet.tx) / (jet.tx * jet.tx);
    WeightJet { g, j, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn nonlinear() -> MapFamily {
        MapFamily::new(
            PerturbationKind::Composed,
            vec![CircleMap::new(2, TrigPoly::sine(1, 0.1))],
            vec![TrigPoly::sine(1, 1.0)],
            0.02,
        )
        .unwrap()
    }

    #[test]
    fn doubling_jet() {
        let fam = MapFamily::linear(2).unwrap();
        let jet = fam.map_jet(Symbol::Letter(0), 0.0, 0.25).unwrap();
        assert_eq!(jet.image, 0.5);
        assert_eq!(jet.tx, 2.0);
        assert_eq!(jet.te, 0.0);
        let w = fam.weight_jet(Symbol::Letter(0), 0.0, 0.7).unwrap();
        assert_eq!((w.g, w.j, w.v), (0.5, 0.0, 0.0));
    }

    #[test]
    fn composed_te_is_perturbation_of_image() {
        let fam = MapFamily::new(
            PerturbationKind::Composed,
            vec![CircleMap::linear(2)],
            vec![TrigPoly::sine(1, 1.0)],
            0.05,
        )
        .unwrap();
        let jet = fam.map_jet(Symbol::Letter(0), 0.0, 0.25).unwrap();
        assert_abs_diff_eq!(jet.te, 0.0, epsilon = 1e-15);
        let jet = fam.map_jet(Symbol::Letter(0), 0.0, 0.1).unwrap();
        assert_abs_diff_eq!(jet.te, (TAU * 0.2).sin(), epsilon = 1e-15);
    }

    #[test]
    fn nonlinear_derivative_at_zero() {
        let fam = nonlinear();
        let jet = fam.map_jet(Symbol::Letter(0), 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(jet.tx, 2.0 + 0.2 * std::f64::consts::PI, epsilon = 1e-14);
        assert_abs_diff_eq!(jet.tx, 2.628_318_530_717_958_6, epsilon = 1e-14);
    }

    #[test]
    fn rigid_drift_weights() {
        let fam = MapFamily::new(
            PerturbationKind::Additive,
            vec![CircleMap::linear(2)],
            vec![TrigPoly::constant(1.0)],
            0.5,
        )
        .unwrap();
        for x in [0.0, 0.3, 0.77] {
            let w = fam.weight_jet(Symbol::Letter(0), 0.0, x).unwrap();
            assert_eq!(w.g, 0.5);
            assert_eq!(w.v, -0.5);
            assert_eq!(w.j, 0.0);
        }
    }

    #[test]
    fn weight_jet_matches_finite_differences() {
        let fam = nonlinear();
        let s = Symbol::Letter(0);
        let x = 0.3;
        let w = fam.weight_jet(s, 0.0, x).unwrap();
        let h = 1e-6;
        let jp = fam.map_jet(s, h, x).unwrap();
        let jm = fam.map_jet(s, -h, x).unwrap();
        let j0 = fam.map_jet(s, 0.0, x).unwrap();
        // ∂_eps g by central differences, g′ by central differences in x
        let dg_de = (1.0 / jp.tx - 1.0 / jm.tx) / (2.0 * h);
        let gx = |y: f64| 1.0 / fam.map_jet(s, 0.0, y).unwrap().tx;
        let dg_dx = (gx(x + h) - gx(x - h)) / (2.0 * h);
        let te_fd = (fam.lift(s, h, x) - fam.lift(s, -h, x)) / (2.0 * h);
        let v_fd = -te_fd / j0.tx;
        let j_fd = (dg_de + v_fd * dg_dx) / w.g;
        assert_abs_diff_eq!(w.g, 1.0 / j0.tx, epsilon = 1e-15);
        assert_abs_diff_eq!(w.v, v_fd, epsilon = 1e-8);
        assert_abs_diff_eq!(w.j, j_fd, epsilon = 1e-6);
    }

    #[test]
    fn jet_is_periodic() {
        let fam = nonlinear();
        let a = fam.map_jet(Symbol::Letter(0), 0.015, 0.37).unwrap();
        let b = fam.map_jet(Symbol::Letter(0), 0.015, 1.37).unwrap();
        assert_abs_diff_eq!(a.image, b.image, epsilon = 1e-14);
        assert_abs_diff_eq!(a.tx, b.tx, epsilon = 1e-12);
        assert_abs_diff_eq!(a.te, b.te, epsilon = 1e-12);
    }

    #[test]
    fn te_matches_central_differences() {
        // both kinds are affine in eps, so the O(h²) term vanishes identically
        let fam = nonlinear();
        let s = Symbol::Letter(0);
        for x in [0.1, 0.45, 0.8] {
            let te = fam.map_jet(s, 0.005, x).unwrap().te;
            for h in [1e-2, 5e-3, 2.5e-3] {
                let fd = (fam.lift(s, 0.005 + h, x) - fam.lift(s, 0.005 - h, x)) / (2.0 * h);
                assert!((fd - te).abs() <= 1e-11, "h = {h}");
            }
        }
    }

    #[test]
    fn doubling_preimages() {
        let fam = MapFamily::linear(2).unwrap();
        assert_eq!(
            fam.branch_preimages(Symbol::Letter(0), 0.0, 0.5).unwrap(),
            vec![0.25, 0.75]
        );
        assert_eq!(
            fam.branch_preimages(Symbol::Letter(0), 0.0, 0.0).unwrap(),
            vec![0.0, 0.5]
        );
    }

    #[test]
    fn nonlinear_preimages_reproduce_target() {
        let fam = nonlinear();
        let ys = fam.branch_preimages(Symbol::Letter(0), 0.0, 0.37).unwrap();
        assert_eq!(ys.len(), 2);
        assert!((ys[0] - ys[1]).abs() > 1e-3);
        for y in ys {
            let image = fam.map_jet(Symbol::Letter(0), 0.0, y).unwrap().image;
            let r = (image - 0.37 + 0.5).rem_euclid(1.0) - 0.5;
            assert!(r.abs() <= 1e-13, "residual {r}");
        }
    }

    #[test]
    fn errors() {
        let fam = nonlinear();
        assert_eq!(
            fam.map_jet(Symbol::Letter(3), 0.0, 0.1).unwrap_err(),
            Error::SymbolOutOfRange(3, 1)
        );
        assert!(matches!(
            fam.map_jet(Symbol::Letter(0), 0.05, 0.1),
            Err(Error::EpsOutOfRange { .. })
        ));
        let bad = MapFamily::new(
            PerturbationKind::Additive,
            vec![CircleMap::new(2, TrigPoly::sine(1, 0.2))],
            vec![TrigPoly::zero()],
            0.1,
        );
        assert!(matches!(bad, Err(Error::NotExpanding { .. })));
        let mixed = MapFamily::new(
            PerturbationKind::Additive,
            vec![CircleMap::linear(2), CircleMap::linear(3)],
            vec![TrigPoly::zero()],
            0.1,
        );
        assert!(matches!(mixed, Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn trig_fourier_coefficients() {
        let p = TrigPoly::new(0.5, vec![0.3], vec![0.0, -0.2]);
        let x: f64 = 0.123;
        let direct = p.eval(x);
        let mut series = num_complex::Complex64::new(0.0, 0.0);
        for k in -2i64..=2 {
            series += p.fourier(k) * num_complex::Complex64::from_polar(1.0, TAU * k as f64 * x);
        }
        assert_abs_diff_eq!(series.re, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(series.im, 0.0, epsilon = 1e-15);
    }
}
