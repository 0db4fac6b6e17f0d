//! Observables `F(ω, x) = F_ω(x)` given by one trigonometric polynomial per
//! driving symbol.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{Symbol, TrigPoly};
use crate::spectral::SpectralVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    /// One polynomial shared by all symbols, or one per letter.
    per_symbol: Vec<TrigPoly>,
}

impl Observable {
    pub fn shared(p: TrigPoly) -> Self {
        Self {
            per_symbol: vec![p],
        }
    }

    pub fn per_symbol(polys: Vec<TrigPoly>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidArgument("observable has no components".into()));
        }
        Ok(Self { per_symbol: polys })
    }

    pub fn components(&self) -> &[TrigPoly] {
        &self.per_symbol
    }

    pub fn degree(&self) -> usize {
        self.per_symbol.iter().map(TrigPoly::degree).max().unwrap_or(0)
    }

    /// Component used on the fibre of `symbol`. Rotation phases use the shared
    /// (first) component.
    pub fn at(&self, symbol: Symbol) -> Result<&TrigPoly> {
        match symbol {
            Symbol::Letter(i) if self.per_symbol.len() > 1 => self
                .per_symbol
                .get(i)
                .ok_or(Error::SymbolOutOfRange(i, self.per_symbol.len())),
            _ => Ok(&self.per_symbol[0]),
        }
    }

    pub fn spectral(&self, symbol: Symbol, order: usize) -> Result<SpectralVector> {
        Ok(SpectralVector::from_trig(order, self.at(symbol)?))
    }
}

/// Fast pointwise evaluation of a real band-limited function.
#[derive(Debug, Clone)]
pub struct PointEvaluator {
    c0: f64,
    /// `c_k` for `k = 1..=K`.
    positive: Vec<Complex64>,
}

impl PointEvaluator {
    pub fn new(v: &SpectralVector) -> Self {
        let n = v.order() as i64;
        let top = (1..=n)
            .rev()
            .find(|k| v.coeff(*k) != Complex64::new(0.0, 0.0) || v.coeff(-*k) != Complex64::new(0.0, 0.0))
            .unwrap_or(0);
        Self {
            c0: v.coeff(0).re,
            positive: (1..=top).map(|k| v.coeff(k)).collect(),
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.positive.len()
    }

    /// `c_0 + 2 Re Σ_{k≥1} c_k e^{2πikx}`, valid for real-valued functions.
    pub fn eval(&self, x: f64) -> f64 {
        let z = Complex64::from_polar(1.0, TAU * x);
        let mut power = z;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.positive {
            acc += c * power;
            power *= z;
        }
        self.c0 + 2.0 * acc.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluator_matches_trig_poly() {
        let p = TrigPoly::new(0.3, vec![0.5, 0.0, -0.2], vec![0.1, 0.7]);
        let e = PointEvaluator::new(&SpectralVector::from_trig(16, &p));
        assert_eq!(e.bandwidth(), 3);
        for i in 0..50 {
            let x = i as f64 / 50.0 + 0.013;
            assert!((e.eval(x) - p.eval(x)).abs() <= 1e-14);
        }
    }

    #[test]
    fn component_lookup() {
        let o = Observable::per_symbol(vec![TrigPoly::constant(1.0), TrigPoly::constant(2.0)])
            .unwrap();
        assert_eq!(o.at(Symbol::Letter(1)).unwrap().eval(0.3), 2.0);
        assert!(o.at(Symbol::Letter(2)).is_err());
        assert_eq!(o.at(Symbol::Phase(5)).unwrap().eval(0.3), 1.0);
        let s = Observable::shared(TrigPoly::cosine(1, 1.0));
        assert_eq!(s.at(Symbol::Letter(7)).unwrap().degree(), 1);
    }
}
