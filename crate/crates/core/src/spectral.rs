//! Fourier–Galerkin representation of densities, observables and transfer
//! operators on the circle.
//!
//! A [`SpectralVector`] holds the coefficients `c_k`, `|k| ≤ N`, of
//! `φ(x) = Σ c_k e^{2πikx}`. Transfer operators are assembled by the adjoint
//! change of variables: the `(j, k)` entry of `L` is `∫ e_k · e_{-j}∘T`,
//! evaluated with an oversampled trapezoid rule and one FFT per row.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::maps::{weight_from_jet, MapFamily, MapJet, Symbol, TrigPoly};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn inverse_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncated Fourier series with modes `-N ..= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralVector {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![ZERO; 2 * order + 1],
        }
    }

    pub fn constant(order: usize, c: f64) -> Self {
        let mut v = Self::zeros(order);
        v.coeffs[order] = Complex64::new(c, 0.0);
        v
    }

    /// The Fourier mode `e_k(x) = e^{2πikx}`.
    pub fn mode(order: usize, k: i64) -> Self {
        let mut v = Self::zeros(order);
        v.set(k, Complex64::new(1.0, 0.0));
        v
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "coefficient vector must have odd length".into(),
            ));
        }
        Ok(Self {
            order: coeffs.len() / 2,
            coeffs,
        })
    }

    pub fn from_trig(order: usize, p: &TrigPoly) -> Self {
        let mut v = Self::zeros(order);
        let top = p.degree().min(order) as i64;
        for k in -top..=top {
            v.set(k, p.fourier(k));
        }
        v
    }

    /// Samples `f` on `grid` points and keeps the modes `|k| ≤ order`.
    pub fn from_fn(order: usize, grid: usize, f: impl Fn(f64) -> f64) -> Self {
        let grid = grid.max(2 * order + 1);
        let mut buf: Vec<Complex64> = (0..grid)
            .map(|m| Complex64::new(f(m as f64 / grid as f64), 0.0))
            .collect();
        forward_fft(grid).process(&mut buf);
        let mut v = Self::zeros(order);
        for k in -(order as i64)..=order as i64 {
            v.set(k, buf[k.rem_euclid(grid as i64) as usize] / grid as f64);
        }
        v
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.order {
            ZERO
        } else {
            self.coeffs[(k + self.order as i64) as usize]
        }
    }

    pub fn set(&mut self, k: i64, c: Complex64) {
        let idx = (k + self.order as i64) as usize;
        self.coeffs[idx] = c;
    }

    /// `ψ(h) = ∫ h = c_0`.
    pub fn mass(&self) -> f64 {
        self.coeffs[self.order].re
    }

    pub fn mass_complex(&self) -> Complex64 {
        self.coeffs[self.order]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self += a · other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.order, other.order);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// `∫ φ·h dx = Σ_k φ_{-k} h_k` for the observable `φ = other`.
    pub fn integral_product(&self, other: &Self) -> Complex64 {
        let n = self.order.min(other.order) as i64;
        (-n..=n).map(|k| other.coeff(-k) * self.coeff(k)).sum()
    }

    /// `h(φ) = ∫ φ dh`, real part.
    pub fn pair(&self, observable: &Self) -> f64 {
        self.integral_product(observable).re
    }

    /// Pointwise product truncated back to `self.order`.
    pub fn product(&self, other: &Self) -> Self {
        let n = self.order as i64;
        let m = other.order as i64;
        let mut out = Self::zeros(self.order);
        for (a_idx, a) in self.coeffs.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let ka = a_idx as i64 - n;
            for (b_idx, b) in other.coeffs.iter().enumerate() {
                let k = ka + b_idx as i64 - m;
                if k.abs() <= n {
                    out.coeffs[(k + n) as usize] += a * b;
                }
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let n = self.order as i64;
        Self {
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, TAU * (i as i64 - n) as f64))
                .collect(),
        }
    }

    pub fn resized(&self, order: usize) -> Self {
        let mut v = Self::zeros(order);
        let top = order.min(self.order) as i64;
        for k in -top..=top {
            v.set(k, self.coeff(k));
        }
        v
    }

    /// Complex values of `φ^{(deriv)}` at `grid` equispaced points.
    pub fn eval_grid_complex(&self, grid: usize, deriv: u32) -> Vec<Complex64> {
        assert!(grid >= self.dim(), "grid too coarse for truncation order");
        let mut buf = vec![ZERO; grid];
        let n = self.order as i64;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = i as i64 - n;
            let factor = Complex64::new(0.0, TAU * k as f64).powu(deriv);
            buf[k.rem_euclid(grid as i64) as usize] = if deriv == 0 { *c } else { c * factor };
        }
        inverse_fft(grid).process(&mut buf);
        buf
    }

    /// Real part of `φ` at `grid` equispaced points `m / grid`.
    pub fn eval_grid(&self, grid: usize) -> Vec<f64> {
        self.eval_grid_complex(grid, 0).into_iter().map(|c| c.re).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.order as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (c * Complex64::from_polar(1.0, TAU * (i as i64 - n) as f64 * x)).re)
            .sum()
    }

    /// `max_k |c_{-k} - conj(c_k)|`; zero for real-valued functions.
    pub fn reality_defect(&self) -> f64 {
        let n = self.order as i64;
        (0..=n)
            .map(|k| (self.coeff(-k) - self.coeff(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.coeffs)
    }

    pub(crate) fn from_dvector(v: DVector<Complex64>) -> Self {
        Self {
            order: v.len() / 2,
            coeffs: v.as_slice().to_vec(),
        }
    }
}

impl Add for &SpectralVector {
    type Output = SpectralVector;
    fn add(self, rhs: Self) -> SpectralVector {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralVector {
    type Output = SpectralVector;
    fn sub(self, rhs: Self) -> SpectralVector {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralVector {
    type Output = SpectralVector;
    fn mul(self, rhs: f64) -> SpectralVector {
        self.scaled(rhs)
    }
}

/// The Sobolev ladder `B_ss = W^{3,1} ⊂ B_s = W^{2,1} ⊂ B_w = W^{1,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Bss,
    Bs,
    Bw,
}

impl Space {
    pub fn derivatives(self) -> u32 {
        match self {
            Space::Bss => 3,
            Space::Bs => 2,
            Space::Bw => 1,
        }
    }
}

/// `W^{k,1}` norm `Σ_{j ≤ k} ∫|φ^{(j)}|`, trapezoid rule on `8·(2N+1)` points.
pub fn norm(v: &SpectralVector, space: Space) -> f64 {
    w_norm(v, space.derivatives())
}

pub fn w_norm(v: &SpectralVector, derivatives: u32) -> f64 {
    let grid = 8 * v.dim();
    (0..=derivatives)
        .map(|j| {
            let vals = v.eval_grid_complex(grid, j);
            vals.iter().map(|c| c.norm()).sum::<f64>() / grid as f64
        })
        .sum()
}

/// Squared `H^s` weight of mode `k`: `Σ_{j ≤ s} (2πk)^{2j}`.
pub fn h_weight_sq(k: i64, derivatives: u32) -> f64 {
    let w = (TAU * k as f64).powi(2);
    (0..=derivatives).map(|j| w.powi(j as i32)).sum()
}

/// Coefficient-exact `H^s` norm `(Σ_k Σ_{j ≤ s} (2πk)^{2j} |c_k|²)^{1/2}`.
pub fn h_norm(v: &SpectralVector, derivatives: u32) -> f64 {
    let n = v.order as i64;
    v.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| h_weight_sq(i as i64 - n, derivatives) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Truncation order and quadrature oversampling of the Galerkin scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Discretization {
    pub order: usize,
    pub oversample: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            order: 64,
            oversample: 8,
        }
    }
}

impl Discretization {
    pub fn new(order: usize, oversample: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidArgument("truncation order must be >= 1".into()));
        }
        if oversample < 4 {
            return Err(Error::InvalidArgument("oversample must be >= 4".into()));
        }
        Ok(Self { order, oversample })
    }

    pub fn dim(&self) -> usize {
        2 * self.order + 1
    }

    pub fn quadrature_len(&self) -> usize {
        self.oversample * self.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    Transfer,
    Derivative,
}

/// Dense Galerkin matrix of `L_{ω,eps}` or of its `eps`-derivative `L̂_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub matrix: DMatrix<Complex64>,
    pub order: usize,
    pub symbol: Symbol,
    pub eps: f64,
    pub kind: OperatorKind,
}

impl TransferMatrix {
    pub fn entry(&self, j: i64, k: i64) -> Complex64 {
        let n = self.order as i64;
        self.matrix[((j + n) as usize, (k + n) as usize)]
    }

    pub fn apply(&self, v: &SpectralVector) -> SpectralVector {
        debug_assert_eq!(v.order, self.order);
        SpectralVector::from_dvector(&self.matrix * v.to_dvector())
    }

    /// Deviation of row 0 from `δ_{0k}` (transfer) or from zero (derivative).
    pub fn mass_row_defect(&self) -> f64 {
        let n = self.order as i64;
        (-n..=n)
            .map(|k| {
                let target = if self.kind == OperatorKind::Transfer && k == 0 {
                    1.0
                } else {
                    0.0
                };
                (self.entry(0, k) - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |L_{-j,-k} - conj(L_{j,k})|`
    pub fn reality_defect(&self) -> f64 {
        let n = self.order as i64;
        let mut worst: f64 = 0.0;
        for j in -n..=n {
            for k in -n..=n {
                worst = worst.max((self.entry(-j, -k) - self.entry(j, k).conj()).norm());
            }
        }
        worst
    }
}

struct GridJets {
    points: Vec<f64>,
    jets: Vec<MapJet>,
}

fn grid_jets(family: &MapFamily, symbol: Symbol, eps: f64, len: usize) -> Result<GridJets> {
    let points: Vec<f64> = (0..len).map(|m| m as f64 / len as f64).collect();
    let jets = points
        .iter()
        .map(|&y| family.map_jet(symbol, eps, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridJets { points, jets })
}

/// Rows `j ∈ rows` of `(j,k) ↦ (1/M) Σ_m e^{-2πij T(y_m)} (a_m + 2πik b_m) e^{2πik y_m}`
/// for `|k| ≤ order`, one inverse FFT per row and weight.
fn adjoint_rows(
    grid: &GridJets,
    weights: Option<&[(f64, f64)]>,
    rows: std::ops::RangeInclusive<i64>,
    order: usize,
) -> Vec<Vec<Complex64>> {
    let len = grid.points.len();
    let n = order as i64;
    let row_list: Vec<i64> = rows.collect();
    par_map(row_list.len(), |r| {
        let j = row_list[r];
        let fft = inverse_fft(len);
        let phase: Vec<Complex64> = grid
            .jets
            .iter()
            .map(|jet| Complex64::from_polar(1.0, -TAU * j as f64 * jet.image))
            .collect();
        let mut a: Vec<Complex64> = match weights {
            None => phase.clone(),
            Some(w) => phase.iter().zip(w).map(|(p, (aw, _))| p * aw).collect(),
        };
        fft.process(&mut a);
        let b = weights.map(|w| {
            let mut b: Vec<Complex64> = phase.iter().zip(w).map(|(p, (_, bw))| p * bw).collect();
            fft.process(&mut b);
            b
        });
        let scale = 1.0 / len as f64;
        (-n..=n)
            .map(|k| {
                let idx = k.rem_euclid(len as i64) as usize;
                let mut e = a[idx];
                if let Some(b) = &b {
                    e += Complex64::new(0.0, TAU * k as f64) * b[idx];
                }
                e * scale
            })
            .collect()
    })
}

fn rows_to_matrix(rows: Vec<Vec<Complex64>>) -> DMatrix<Complex64> {
    let nrows = rows.len();
    let ncols = rows[0].len();
    DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c])
}

fn check_grid(disc: &Discretization) -> Result<()> {
    if disc.order < 1 || disc.oversample < 4 {
        return Err(Error::InvalidArgument(format!(
            "invalid discretization {disc:?}"
        )));
    }
    Ok(())
}

/// Galerkin matrix of the transfer operator `L_{ω,eps}`.
pub fn assemble_transfer(
    family: &MapFamily,
    symbol: Symbol,
    eps: f64,
    disc: &Discretization,
) -> Result<TransferMatrix> {
    check_grid(disc)?;
    let n = disc.order as i64;
    let grid = grid_jets(family, symbol, eps, disc.quadrature_len())?;
    let rows = adjoint_rows(&grid, None, -n..=n, disc.order);
    Ok(TransferMatrix {
        matrix: rows_to_matrix(rows),
        order: disc.order,
        symbol,
        eps,
        kind: OperatorKind::Transfer,
    })
}

/// Galerkin matrix of `L̂_ω φ = L_ω(J·φ + v·φ′)` at `eps = 0`.
pub fn assemble_derivative(
    family: &MapFamily,
    symbol: Symbol,
    disc: &Discretization,
) -> Result<TransferMatrix> {
    check_grid(disc)?;
    let n = disc.order as i64;
    let grid = grid_jets(family, symbol, 0.0, disc.quadrature_len())?;
    let weights: Vec<(f64, f64)> = grid
        .jets
        .iter()
        .map(|jet| {
            let w = weight_from_jet(jet);
            (w.j, w.v)
        })
        .collect();
    let rows = adjoint_rows(&grid, Some(&weights), -n..=n, disc.order);
    Ok(TransferMatrix {
        matrix: rows_to_matrix(rows),
        order: disc.order,
        symbol,
        eps: 0.0,
        kind: OperatorKind::Derivative,
    })
}

/// Second route for composed families: `L̂_ω φ = R_s(-(S · L_B φ)′)`, where
/// `L_B` is the unperturbed fibre operator and `R_s` the post-rotation.
pub fn assemble_derivative_composed(
    family: &MapFamily,
    symbol: Symbol,
    disc: &Discretization,
) -> Result<TransferMatrix> {
    check_grid(disc)?;
    if family.kind() != crate::maps::PerturbationKind::Composed {
        return Err(Error::InvalidArgument(
            "composed-route assembly needs a composed family".into(),
        ));
    }
    let n = disc.order as i64;
    let s = &family.perturbations()[0];
    let q = s.degree() as i64;
    let shift = family.post_rotation(symbol);
    // Fibre operator without the post-rotation; extra rows feed the product with S.
    let base_symbol = match symbol {
        Symbol::Phase(_) => Symbol::Phase(0),
        other => other,
    };
    let grid = grid_jets(family, base_symbol, 0.0, disc.quadrature_len())?;
    let rows = adjoint_rows(&grid, None, -(n + q)..=(n + q), disc.order);
    let row = |j: i64| &rows[(j + n + q) as usize];
    let dim = disc.dim();
    let mut matrix = DMatrix::from_element(dim, dim, ZERO);
    for j in -n..=n {
        let rot = Complex64::from_polar(1.0, -TAU * j as f64 * shift);
        let dj = Complex64::new(0.0, -TAU * j as f64) * rot;
        for l in -q..=q {
            let sl = s.fourier(l);
            if sl == ZERO {
                continue;
            }
            let src = row(j - l);
            for c in 0..dim {
                matrix[((j + n) as usize, c)] += dj * sl * src[c];
            }
        }
    }
    Ok(TransferMatrix {
        matrix,
        order: disc.order,
        symbol,
        eps: 0.0,
        kind: OperatorKind::Derivative,
    })
}

/// Direct branch-sum action `(Lφ)(x) = Σ_{T y = x} φ(y)/|T′(y)|`.
pub fn branch_sum(
    family: &MapFamily,
    symbol: Symbol,
    eps: f64,
    phi: impl Fn(f64) -> f64,
    x: f64,
) -> Result<f64> {
    let ys = family.branch_preimages(symbol, eps, x)?;
    let mut sum = 0.0;
    for y in ys {
        let jet = family.map_jet(symbol, eps, y)?;
        sum += phi(y) / jet.tx.abs();
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, PerturbationKind};
    use approx::assert_abs_diff_eq;

    fn disc(order: usize) -> Discretization {
        Discretization::new(order, 8).unwrap()
    }

    #[test]
    fn doubling_transfer_is_mode_halving() {
        let fam = MapFamily::linear(2).unwrap();
        let m = assemble_transfer(&fam, Symbol::Letter(0), 0.0, &disc(8)).unwrap();
        for j in -8i64..=8 {
            for k in -8i64..=8 {
                let expect = if k == 2 * j { 1.0 } else { 0.0 };
                assert!((m.entry(j, k) - expect).norm() <= 1e-13, "({j},{k})");
            }
        }
    }

    #[test]
    fn mass_rows() {
        let fam = MapFamily::new(
            PerturbationKind::Composed,
            vec![CircleMap::new(2, TrigPoly::sine(1, 0.1))],
            vec![TrigPoly::sine(1, 0.25)],
            0.1,
        )
        .unwrap();
        let d = disc(16);
        let l = assemble_transfer(&fam, Symbol::Letter(0), 0.07, &d).unwrap();
        assert!(l.mass_row_defect() <= 1e-12);
        assert!(l.reality_defect() <= 1e-12);
        let lh = assemble_derivative(&fam, Symbol::Letter(0), &d).unwrap();
        assert!(lh.mass_row_defect() <= 1e-12);
    }

    #[test]
    fn zero_perturbation_has_zero_derivative() {
        let fam = MapFamily::linear(2).unwrap();
        let lh = assemble_derivative(&fam, Symbol::Letter(0), &disc(8)).unwrap();
        assert!(lh.matrix.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn rigid_drift_annihilates_constants() {
        let fam = MapFamily::new(
            PerturbationKind::Additive,
            vec![CircleMap::linear(2)],
            vec![TrigPoly::constant(1.0)],
            0.5,
        )
        .unwrap();
        let lh = assemble_derivative(&fam, Symbol::Letter(0), &disc(8)).unwrap();
        let out = lh.apply(&SpectralVector::constant(8, 1.0));
        assert!(out.max_abs() <= 1e-14);
    }

    #[test]
    fn norms_of_simple_functions() {
        let one = SpectralVector::constant(8, 1.0);
        for s in [Space::Bss, Space::Bs, Space::Bw] {
            assert_abs_diff_eq!(norm(&one, s), 1.0, epsilon = 1e-14);
            assert_eq!(norm(&SpectralVector::zeros(8), s), 0.0);
        }
        let cos = SpectralVector::from_trig(64, &TrigPoly::cosine(1, 1.0));
        // ∫|cos 2πx| + ∫|2π sin 2πx| = 2/π + 4
        let exact = 2.0 / std::f64::consts::PI + 4.0;
        assert_abs_diff_eq!(norm(&cos, Space::Bw), exact, epsilon = 1e-4);
        assert_abs_diff_eq!(h_norm(&one, 2), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn product_and_pairing() {
        let n = 6;
        let c = SpectralVector::from_trig(n, &TrigPoly::cosine(1, 1.0));
        let sq = c.product(&c);
        // cos² = 1/2 + cos(4πx)/2
        assert_abs_diff_eq!(sq.mass(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sq.coeff(2).re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.pair(&c), 0.5, epsilon = 1e-15);
        let x = 0.3;
        assert_abs_diff_eq!(sq.eval(x), (TAU * x).cos().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn from_fn_recovers_trig_polynomial() {
        let p = TrigPoly::new(0.2, vec![0.1, 0.0, -0.3], vec![0.5]);
        let v = SpectralVector::from_fn(8, 64, |x| p.eval(x));
        let w = SpectralVector::from_trig(8, &p);
        assert!((&v - &w).max_abs() <= 1e-15);
    }
}
