//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file describes the default
//! two-symbol Bernoulli family. See `configs/default.toml` for the full
//! schema with comments.

use std::path::Path;

use quenched_core::cocycle::{DrivingKind, DrivingSystem, GOLDEN_ROTATION};
use quenched_core::maps::{CircleMap, MapFamily, PerturbationKind, TrigPoly};
use quenched_core::observable::Observable;
use quenched_core::spectral::Discretization;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Bumped whenever a field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    pub driving: DrivingConfig,
    pub numerics: Numerics,
    pub limits: Limits,
    pub experiment: Experiment,
    pub observables: Vec<ObservableConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: FamilyConfig::default(),
            driving: DrivingConfig::default(),
            numerics: Numerics::default(),
            limits: Limits::default(),
            experiment: Experiment::default(),
            observables: vec![ObservableConfig {
                name: "cos1".into(),
                poly: Some(Poly {
                    cos: vec![1.0],
                    ..Poly::default()
                }),
                per_symbol: None,
            }],
        }
    }
}

/// Real trigonometric polynomial `c + Σ a_m cos 2πmx + b_m sin 2πmx`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Poly {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Poly {
    fn to_trig(&self) -> TrigPoly {
        TrigPoly::new(self.constant, self.cos.clone(), self.sin.clone())
    }

    fn harmonics(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn budget(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    fn finite(&self) -> bool {
        self.constant.is_finite() && self.cos.iter().chain(&self.sin).all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub degree: i64,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl MapConfig {
    fn poly(&self) -> Poly {
        Poly {
            constant: self.constant,
            cos: self.cos.clone(),
            sin: self.sin.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub kind: PerturbationKind,
    pub eps_max: f64,
    /// Rigid rotation by `phase_drift·ω` after each map (rotation driving).
    pub phase_drift: f64,
    pub maps: Vec<MapConfig>,
    pub perturbations: Vec<Poly>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            kind: PerturbationKind::Composed,
            eps_max: 0.1,
            phase_drift: 0.0,
            maps: vec![
                MapConfig {
                    degree: 2,
                    constant: 0.0,
                    cos: vec![],
                    sin: vec![0.05],
                },
                MapConfig {
                    degree: 2,
                    constant: 0.25,
                    cos: vec![0.03],
                    sin: vec![0.0, 0.01],
                },
            ],
            perturbations: vec![Poly {
                sin: vec![0.1],
                ..Poly::default()
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrivingConfig {
    pub kind: DrivingName,
    pub probabilities: Vec<f64>,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivingName {
    Bernoulli,
    Rotation,
}

impl Default for DrivingConfig {
    fn default() -> Self {
        Self {
            kind: DrivingName::Bernoulli,
            probabilities: vec![0.5, 0.5],
            alpha: GOLDEN_ROTATION,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Fourier truncation order `N` (modes `-N..=N`).
    pub order: usize,
    pub oversample: usize,
    pub n_pullback: usize,
    pub tol: f64,
    /// Fixed number of response terms; adaptive when absent.
    pub n_terms: Option<usize>,
    pub max_terms: usize,
    pub n_corr: usize,
    /// Monte Carlo path count.
    pub samples: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            order: 64,
            oversample: 8,
            n_pullback: 60,
            tol: 1e-12,
            n_terms: None,
            max_terms: 40,
            n_corr: 30,
            samples: 200,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    /// Highest harmonic allowed in any map, perturbation or observable.
    pub max_harmonic: usize,
    /// Cap on `Σ |a_m| + |b_m|` for each map nonlinearity and perturbation.
    pub max_coefficient_sum: f64,
    pub max_order: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_harmonic: 16,
            max_coefficient_sum: 1.0,
            max_order: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub density_eps: f64,
    pub density_grid: usize,
    pub density_paths: usize,
    /// Stability sweep.
    pub eps: Vec<f64>,
    /// Difference quotients compared with the response density.
    pub response_eps: Vec<f64>,
    pub response_paths: usize,
    /// Paths on which the Koopman-side series is also evaluated.
    pub observable_side_paths: usize,
    pub fd_step: f64,
    pub response_rel_tol: f64,
    pub annealed_se_factor: f64,
    pub variance_eps: Vec<f64>,
    pub variance_fd_step: f64,
    pub variance_rel_tol: f64,
    pub clt_eps: f64,
    pub clt_n: usize,
    pub clt_trials: usize,
    pub clt_ks_tol: f64,
    pub decay_samples: usize,
    pub decay_n_max: usize,
    pub lyapunov_eps: Vec<f64>,
    pub lyapunov_n: usize,
    pub lyapunov_paths: usize,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            density_eps: 0.0,
            density_grid: 256,
            density_paths: 4,
            eps: vec![1e-1, 1e-2, 1e-3, 1e-4],
            response_eps: vec![1e-1, 1e-2, 1e-3],
            response_paths: 50,
            observable_side_paths: 3,
            fd_step: 1e-3,
            response_rel_tol: 1e-3,
            annealed_se_factor: 3.0,
            variance_eps: vec![0.0],
            variance_fd_step: 1e-2,
            variance_rel_tol: 1e-2,
            clt_eps: 0.0,
            clt_n: 10_000,
            clt_trials: 10_000,
            clt_ks_tol: 0.02,
            decay_samples: 10,
            decay_n_max: 30,
            lyapunov_eps: vec![0.0, 0.01, 0.05],
            lyapunov_n: 60,
            lyapunov_paths: 5,
        }
    }
}

/// Named observable: one polynomial for every symbol, or one per letter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<Poly>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_symbol: Option<Vec<Poly>>,
}

/// Validated, ready-to-run view of a config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub family: MapFamily,
    pub driving: DrivingSystem,
    pub discretization: Discretization,
    pub observables: Vec<(String, Observable)>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let lim = &self.limits;
        let fam = &self.family;
        let polys = fam
            .maps
            .iter()
            .map(MapConfig::poly)
            .chain(fam.perturbations.iter().cloned());
        for p in polys {
            if !p.finite() {
                return bad("non-finite coefficient in family".into());
            }
            if p.harmonics() > lim.max_harmonic {
                return bad(format!(
                    "family uses harmonic {} above the cap {}",
                    p.harmonics(),
                    lim.max_harmonic
                ));
            }
            if p.budget() > lim.max_coefficient_sum {
                return bad(format!(
                    "coefficient budget {} exceeds the cap {}",
                    p.budget(),
                    lim.max_coefficient_sum
                ));
            }
        }
        let family = MapFamily::with_phase_drift(
            fam.kind,
            fam.maps
                .iter()
                .map(|m| CircleMap::new(m.degree, m.poly().to_trig()))
                .collect(),
            fam.perturbations.iter().map(Poly::to_trig).collect(),
            fam.eps_max,
            fam.phase_drift,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;

        let d = &self.driving;
        let driving = DrivingSystem {
            kind: match d.kind {
                DrivingName::Bernoulli => DrivingKind::Bernoulli {
                    probabilities: d.probabilities.clone(),
                },
                DrivingName::Rotation => DrivingKind::Rotation { alpha: d.alpha },
            },
            seed: d.seed,
        };
        driving
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(q) = driving.alphabet_size() {
            if q != family.symbol_count() {
                return bad(format!(
                    "driving has {q} symbols but the family has {}",
                    family.symbol_count()
                ));
            }
        } else if family.symbol_count() != 1 {
            return bad("rotation driving needs a single-map family".into());
        }

        let n = &self.numerics;
        if n.order > lim.max_order {
            return bad(format!("order {} above the cap {}", n.order, lim.max_order));
        }
        let discretization = Discretization::new(n.order, n.oversample)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if n.samples == 0 || n.n_pullback == 0 || n.max_terms == 0 || n.n_corr == 0 {
            return bad("samples, n_pullback, max_terms and n_corr must be positive".into());
        }
        if !(n.tol > 0.0) {
            return bad("tol must be positive".into());
        }

        let e = &self.experiment;
        let in_range = |x: f64| x.is_finite() && x.abs() <= fam.eps_max;
        let eps_lists = [&e.eps, &e.response_eps, &e.variance_eps, &e.lyapunov_eps];
        if eps_lists.iter().any(|l| l.iter().any(|x| !in_range(*x)))
            || !in_range(e.density_eps)
            || !in_range(e.clt_eps)
            || !in_range(2.0 * e.fd_step)
            || !in_range(2.0 * e.variance_fd_step)
        {
            return bad(format!("every eps must lie in [-{0}, {0}]", fam.eps_max));
        }
        if e.eps.iter().chain(&e.response_eps).any(|x| *x == 0.0) {
            return bad("stability and response eps lists must be nonzero".into());
        }
        if !(e.fd_step > 0.0 && e.variance_fd_step > 0.0) {
            return bad("finite-difference steps must be positive".into());
        }
        if e.density_grid == 0
            || e.clt_n == 0
            || e.clt_trials == 0
            || e.decay_samples == 0
            || e.decay_n_max == 0
            || e.lyapunov_n == 0
        {
            return bad("grid sizes, trial counts and horizons must be positive".into());
        }

        if self.observables.is_empty() {
            return bad("at least one observable is required".into());
        }
        let mut observables = Vec::new();
        for o in &self.observables {
            if observables.iter().any(|(name, _)| name == &o.name) {
                return bad(format!("duplicate observable name {:?}", o.name));
            }
            let polys: Vec<&Poly> = match (&o.poly, &o.per_symbol) {
                (Some(p), None) => vec![p],
                (None, Some(ps)) if ps.len() == family.symbol_count() => ps.iter().collect(),
                (None, Some(ps)) => {
                    return bad(format!(
                        "observable {:?} has {} components for {} symbols",
                        o.name,
                        ps.len(),
                        family.symbol_count()
                    ))
                }
                _ => {
                    return bad(format!(
                        "observable {:?} needs exactly one of poly or per_symbol",
                        o.name
                    ))
                }
            };
            if polys.iter().any(|p| !p.finite() || p.harmonics() > lim.max_harmonic) {
                return bad(format!("observable {:?} is out of bounds", o.name));
            }
            if polys.iter().any(|p| p.harmonics() > n.order) {
                return bad(format!(
                    "observable {:?} is not resolved at order {}",
                    o.name, n.order
                ));
            }
            let obs = Observable::per_symbol(polys.iter().map(|p| p.to_trig()).collect())
                .map_err(|e| CliError::Config(e.to_string()))?;
            observables.push((o.name.clone(), obs));
        }
        Ok(Resolved {
            family,
            driving,
            discretization,
            observables,
        })
    }
}
