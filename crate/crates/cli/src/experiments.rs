//! One driver per subcommand. Each returns its tables and a JSON summary;
//! writing files is left to the runner.

use clap::ValueEnum;
use quenched_core::clt::{
    clt_empirical, sigma2, sigma2_derivative, sigma2_finite_difference, VarianceOptions,
};
use quenched_core::cocycle::{
    estimate_decay, log_norm_profile, phase_resolution, sample_path, Cocycle, DecayEstimate,
};
use quenched_core::equivariant::{pullback_density, stability_curve};
use quenched_core::exec::try_par_map;
use quenched_core::response::{
    annealed_finite_difference, annealed_response, finite_difference_response, hat_h,
    quenched_response, FiniteDifference, ResponseOptions,
};
use quenched_core::spectral::{norm, Space};
use quenched_core::stats::{mean_stderr, LinearFit};
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Resolved};
use crate::error::CliError;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Density,
    Stability,
    Response,
    Annealed,
    Variance,
    Clt,
    Spectrum,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Density => "density",
            Subcommand::Stability => "stability",
            Subcommand::Response => "response",
            Subcommand::Annealed => "annealed",
            Subcommand::Variance => "variance",
            Subcommand::Clt => "clt",
            Subcommand::Spectrum => "spectrum",
        }
    }
}

/// Differences of the (I)-type limit terms above this count as a
/// disagreement with the theory.
pub const TERM_I_TOL: f64 = 1e-10;
pub const NEGATIVE_VARIANCE_TOL: f64 = 1e-8;
pub const NEGATIVE_DENSITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Report {
    /// Main table, written to `<subcommand>.csv`.
    pub table: Table,
    /// Further tables as `(file stem, table)`.
    pub extra: Vec<(String, Table)>,
    pub summary: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    pub hypothesis_failures: Vec<String>,
    pub disagreements: Vec<String>,
}

impl Report {
    fn new(header: &[&'static str]) -> Self {
        Self {
            table: Table::new(header),
            extra: Vec::new(),
            summary: Map::new(),
            tolerances: Map::new(),
            hypothesis_failures: Vec::new(),
            disagreements: Vec::new(),
        }
    }
}

pub fn run(cmd: Subcommand, cfg: &ExperimentConfig, res: &Resolved) -> Result<Report, CliError> {
    let cocycle = Cocycle::new(res.family.clone(), res.discretization);
    let mut report = match cmd {
        Subcommand::Density => density(cfg, res, &cocycle),
        Subcommand::Stability => stability(cfg, res, &cocycle),
        Subcommand::Response => response(cfg, res, &cocycle),
        Subcommand::Annealed => annealed(cfg, res, &cocycle),
        Subcommand::Variance => variance(cfg, res, &cocycle),
        Subcommand::Clt => clt(cfg, res, &cocycle),
        Subcommand::Spectrum => spectrum(cfg, res, &cocycle),
    }?;
    let n = &cfg.numerics;
    let t = &mut report.tolerances;
    t.insert("order".into(), json!(n.order));
    t.insert("oversample".into(), json!(n.oversample));
    t.insert("n_pullback".into(), json!(n.n_pullback));
    t.insert("pullback_tol".into(), json!(n.tol));
    Ok(report)
}

fn fit_json(fit: &Option<LinearFit>) -> Value {
    match fit {
        Some(f) => json!({
            "slope": f.slope,
            "intercept": f.intercept,
            "r_squared": f.r_squared,
            "rms_residual": f.rms_residual,
        }),
        None => Value::Null,
    }
}

fn decay_json(d: &DecayEstimate) -> Value {
    json!({
        "d_prime": d.d_prime,
        "lambda_prime": d.lambda_prime,
        "fit_residual": d.residual,
    })
}

fn density(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle) -> Result<Report, CliError> {
    let n = &cfg.numerics;
    let e = &cfg.experiment;
    let mut report = Report::new(&["eps", "path_id", "x", "density"]);
    let densities = try_par_map(e.density_paths.max(1), |i| {
        let path = sample_path(&res.driving, n.n_pullback, i as u64)?;
        pullback_density(c, &path, e.density_eps, n.n_pullback, n.tol)
    })?;
    let mut paths = Vec::new();
    for (i, h) in densities.iter().enumerate() {
        for k in 0..e.density_grid {
            let x = k as f64 / e.density_grid as f64;
            report.table.push(vec![
                e.density_eps.into(),
                i.into(),
                x.into(),
                h.density.eval(x).into(),
            ]);
        }
        let min = h.min_on_grid(e.density_grid.max(4 * n.order));
        if !h.converged {
            report
                .hypothesis_failures
                .push(format!("pullback on path {i} did not converge"));
        }
        if min < -NEGATIVE_DENSITY_TOL {
            report
                .hypothesis_failures
                .push(format!("density on path {i} is negative ({min:e})"));
        }
        paths.push(json!({
            "path_id": i,
            "n_used": h.n_used,
            "residual": h.residual,
            "converged": h.converged,
            "min_density": min,
            "mass": h.density.mass(),
        }));
    }
    report.summary.insert("eps".into(), json!(e.density_eps));
    report.summary.insert("expansion".into(), json!(res.family.expansion()));
    report.summary.insert("paths".into(), Value::Array(paths));
    report
        .tolerances
        .insert("negative_density".into(), json!(NEGATIVE_DENSITY_TOL));
    Ok(report)
}

fn stability(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle) -> Result<Report, CliError> {
    let n = &cfg.numerics;
    let curve = stability_curve(c, &res.driving, &cfg.experiment.eps, n.samples, n.n_pullback, n.tol)?;
    let mut report = Report::new(&["eps", "path_id", "diff_w", "diff_h1", "residual", "n_used"]);
    for r in &curve.rows {
        report.table.push(vec![
            r.eps.into(),
            r.path_id.into(),
            r.diff_w.into(),
            r.diff_h1.into(),
            r.residual.into(),
            r.n_used.into(),
        ]);
    }
    if !curve.all_converged {
        report
            .hypothesis_failures
            .push("some pullback densities did not converge".into());
    }
    let sups: Vec<Value> = curve
        .sups
        .iter()
        .map(|s| json!({"eps": s.eps, "sup_w": s.sup_w, "sup_h1": s.sup_h1, "sup_w_half": s.sup_w_half}))
        .collect();
    let s = &mut report.summary;
    s.insert("samples".into(), json!(n.samples));
    s.insert("sups".into(), Value::Array(sups));
    s.insert(
        "exponent".into(),
        match (&curve.fit_eps_log, curve.degenerate) {
            (_, true) => json!("degenerate"),
            (Some(f), false) => json!(f.slope),
            (None, false) => Value::Null,
        },
    );
    s.insert("fit_eps_log_eps".into(), fit_json(&curve.fit_eps_log));
    s.insert("fit_eps".into(), fit_json(&curve.fit_eps));
    s.insert("fit_eps_h1".into(), fit_json(&curve.fit_eps_h1));
    s.insert("degenerate".into(), json!(curve.degenerate));
    s.insert("norms_disagree".into(), json!(curve.norms_disagree));
    s.insert("sample_sensitivity".into(), json!(curve.sample_sensitivity));
    s.insert("all_converged".into(), json!(curve.all_converged));
    Ok(report)
}

fn response_options(cfg: &ExperimentConfig) -> ResponseOptions {
    ResponseOptions {
        n_terms: cfg.numerics.n_terms,
        max_terms: cfg.numerics.max_terms,
        n_pullback: cfg.numerics.n_pullback,
        observable_side: false,
    }
}

fn fd_settings(cfg: &ExperimentConfig) -> FiniteDifference {
    FiniteDifference {
        step: cfg.experiment.fd_step,
        n_pullback: cfg.numerics.n_pullback,
        tol: cfg.numerics.tol,
    }
}

fn decay(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle, eps: f64) -> Result<DecayEstimate, CliError> {
    let e = &cfg.experiment;
    Ok(estimate_decay(c, &res.driving, eps, e.decay_samples, e.decay_n_max)?)
}

/// `(series, observable side, finite difference, tail bound, terms, consistent)`.
type ResponseRow = (f64, Option<f64>, f64, f64, usize, Option<bool>);

struct PathResponse {
    values: Vec<ResponseRow>,
    gaps: Vec<f64>,
}

fn response(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle) -> Result<Report, CliError> {
    let n = &cfg.numerics;
    let e = &cfg.experiment;
    let decay = decay(cfg, res, c, 0.0)?;
    let base = response_options(cfg);
    let fd = fd_settings(cfg);
    let per_path = try_par_map(e.response_paths.max(1), |i| -> Result<PathResponse, CliError> {
        let path = sample_path(&res.driving, base.window(), i as u64)?;
        let opts = ResponseOptions {
            observable_side: i < e.observable_side_paths,
            ..base
        };
        let mut values = Vec::new();
        let mut terms = 0;
        for (_, obs) in &res.observables {
            let phi = obs.spectral(path.symbol(0)?, n.order)?;
            let r = quenched_response(c, &path, &phi, &decay, &opts)?;
            let v_fd = finite_difference_response(c, &path, &phi, &fd)?;
            terms = terms.max(r.n_terms);
            values.push((r.value, r.value_observable, v_fd, r.tail_bound, r.n_terms, r.consistent));
        }
        let h0 = pullback_density(c, &path, 0.0, n.n_pullback, n.tol)?.density;
        let hat = hat_h(c, &path, terms, n.n_pullback)?;
        let gaps = e
            .response_eps
            .iter()
            .map(|&eps| {
                let he = pullback_density(c, &path, eps, n.n_pullback, n.tol)?.density;
                Ok(norm(&(&(&he - &h0).scaled(1.0 / eps) - &hat), Space::Bw))
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        Ok(PathResponse { values, gaps })
    })?;

    let mut report = Report::new(&[
        "path_id",
        "observable",
        "value_series",
        "value_observable_side",
        "value_fd",
        "tail_bound",
        "n_terms",
    ]);
    let mut max_rel: f64 = 0.0;
    let mut max_ab_over_tail: f64 = 0.0;
    for (i, p) in per_path.iter().enumerate() {
        for ((name, _), &(a, b, v_fd, tail, terms, consistent)) in res.observables.iter().zip(&p.values) {
            report.table.push(vec![
                i.into(),
                name.as_str().into(),
                a.into(),
                b.into(),
                v_fd.into(),
                tail.into(),
                terms.into(),
            ]);
            let rel = (a - v_fd).abs() / v_fd.abs().max(f64::MIN_POSITIVE);
            max_rel = max_rel.max(rel);
            if rel > e.response_rel_tol {
                report.disagreements.push(format!(
                    "path {i}, {name}: series {a} vs finite difference {v_fd}"
                ));
            }
            if let Some(b) = b {
                max_ab_over_tail = max_ab_over_tail.max((a - b).abs() / tail);
            }
            if consistent == Some(false) {
                report.disagreements.push(format!(
                    "path {i}, {name}: density side {a} vs observable side {b:?} beyond 10 tail bounds"
                ));
            }
        }
    }
    let quotients: Vec<Value> = e
        .response_eps
        .iter()
        .enumerate()
        .map(|(k, eps)| {
            let sup = per_path.iter().map(|p| p.gaps[k]).fold(0.0, f64::max);
            json!({"eps": eps, "sup_gap_w": sup})
        })
        .collect();
    let sup_gaps: Vec<f64> = quotients.iter().map(|q| q["sup_gap_w"].as_f64().unwrap()).collect();
    let first = &per_path[0].values[0];
    let s = &mut report.summary;
    s.insert("observable".into(), json!(res.observables[0].0));
    s.insert("value_series".into(), json!(first.0));
    s.insert("value_observable_side".into(), json!(first.1));
    s.insert("value_fd".into(), json!(first.2));
    s.insert("max_rel_error_fd".into(), json!(max_rel));
    s.insert("max_ab_gap_over_tail".into(), json!(max_ab_over_tail));
    s.insert("paths".into(), json!(per_path.len()));
    s.insert("decay".into(), decay_json(&decay));
    s.insert("difference_quotients".into(), Value::Array(quotients));
    s.insert(
        "difference_quotients_monotone".into(),
        json!(sup_gaps.windows(2).all(|w| w[1] < w[0])),
    );
    let t = &mut report.tolerances;
    t.insert("response_rel_tol".into(), json!(e.response_rel_tol));
    t.insert("ab_tail_factor".into(), json!(10.0));
    t.insert("fd_step".into(), json!(e.fd_step));
    t.insert("max_terms".into(), json!(n.max_terms));
    t.insert("n_terms".into(), json!(n.n_terms));
    Ok(report)
}

fn annealed(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle) -> Result<Report, CliError> {
    let n = &cfg.numerics;
    let e = &cfg.experiment;
    let decay = decay(cfg, res, c, 0.0)?;
    let opts = response_options(cfg);
    let fd = fd_settings(cfg);
    let mut report = Report::new(&["path_id", "observable", "value_series", "value_fd"]);
    let mut per_obs = Vec::new();
    for (name, obs) in &res.observables {
        let series = annealed_response(c, &res.driving, obs, n.samples, &decay, &opts)?;
        let finite = annealed_finite_difference(c, &res.driving, obs, n.samples, opts.window(), &fd)?;
        for (i, (a, b)) in series.per_path.iter().zip(&finite.per_path).enumerate() {
            report
                .table
                .push(vec![i.into(), name.as_str().into(), (*a).into(), (*b).into()]);
        }
        let gap = (series.value - finite.value).abs();
        let agree = gap <= e.annealed_se_factor * finite.stderr;
        if !agree {
            report.disagreements.push(format!(
                "{name}: series {} vs finite difference {} ± {}",
                series.value, finite.value, finite.stderr
            ));
        }
        let diffs: Vec<f64> = series
            .per_path
            .iter()
            .zip(&finite.per_path)
            .map(|(a, b)| a - b)
            .collect();
        let (_, paired_se) = mean_stderr(&diffs);
        per_obs.push(json!({
            "observable": name,
            "value_series": series.value,
            "stderr_series": series.stderr,
            "value_fd": finite.value,
            "stderr_fd": finite.stderr,
            "combined_stderr": series.stderr.hypot(finite.stderr),
            "paired_stderr": paired_se,
            "gap": gap,
            "agree": agree,
            "tail_bound": series.tail_bound,
            "n_terms_max": series.n_terms_max,
        }));
    }
    let s = &mut report.summary;
    s.insert("samples".into(), json!(n.samples));
    s.insert("decay".into(), decay_json(&decay));
    s.insert("observables".into(), Value::Array(per_obs));
    let t = &mut report.tolerances;
    t.insert("annealed_se_factor".into(), json!(e.annealed_se_factor));
    t.insert("fd_step".into(), json!(e.fd_step));
    t.insert("max_terms".into(), json!(n.max_terms));
    Ok(report)
}

fn variance_options(cfg: &ExperimentConfig) -> VarianceOptions {
    let n = &cfg.numerics;
    VarianceOptions {
        samples: n.samples,
        n_corr: n.n_corr,
        n_pullback: n.n_pullback,
        n_terms: n.n_terms.unwrap_or(n.max_terms),
    }
}

const VARIANCE_HEADER: [&str; 7] = [
    "observable",
    "eps",
    "sigma2",
    "stderr",
    "dsigma2_formula",
    "dsigma2_fd",
    "ks_stat",
];

fn variance(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle) -> Result<Report, CliError> {
    let e = &cfg.experiment;
    let opts = variance_options(cfg);
    let mut report = Report::new(&VARIANCE_HEADER);
    let mut per_obs = Vec::new();
    for (name, obs) in &res.observables {
        let mut rows = Vec::new();
        for &eps in &e.variance_eps {
            let v = sigma2(c, &res.driving, obs, eps, &opts)?;
            if v.sigma2 < -NEGATIVE_VARIANCE_TOL {
                report
                    .hypothesis_failures
                    .push(format!("{name}: negative variance {} at eps = {eps}", v.sigma2));
            }
            let (formula, fd) = if eps == 0.0 {
                let d = sigma2_derivative(c, &res.driving, obs, &opts)?;
                let (fd, fd_se) =
                    sigma2_finite_difference(c, &res.driving, obs, e.variance_fd_step, &opts)?;
                let rel = (d.value - fd).abs() / fd.abs().max(f64::MIN_POSITIVE);
                if rel > e.variance_rel_tol {
                    report.disagreements.push(format!(
                        "{name}: variance derivative {} vs finite difference {fd}",
                        d.value
                    ));
                }
                if d.max_term_i > TERM_I_TOL {
                    report.disagreements.push(format!(
                        "{name}: (I)-limit term {} above {TERM_I_TOL:e}",
                        d.max_term_i
                    ));
                }
                per_obs.push(json!({
                    "observable": name,
                    "sigma2": v.sigma2,
                    "stderr": v.stderr,
                    "dsigma2_formula": d.value,
                    "dsigma2_formula_stderr": d.stderr,
                    "dsigma2_fd": fd,
                    "dsigma2_fd_stderr": fd_se,
                    "rel_error": rel,
                    "zeroth": d.zeroth,
                    "sum_i": d.sum_i,
                    "sum_ii": d.sum_ii,
                    "sum_iii": d.sum_iii,
                    "max_term_i": d.max_term_i,
                    "correlations": v.terms,
                    "centering_defect": v.centering_defect,
                }));
                (Some(d.value), Some(fd))
            } else {
                (None, None)
            };
            rows.push(json!({"eps": eps, "sigma2": v.sigma2, "stderr": v.stderr}));
            report.table.push(vec![
                name.as_str().into(),
                eps.into(),
                v.sigma2.into(),
                v.stderr.into(),
                formula.into(),
                fd.into(),
                Cell::Empty,
            ]);
        }
        if !per_obs.iter().any(|o| o["observable"] == json!(name)) {
            per_obs.push(json!({"observable": name}));
        }
        per_obs.last_mut().unwrap()["by_eps"] = Value::Array(rows);
    }
    let s = &mut report.summary;
    s.insert("samples".into(), json!(opts.samples));
    s.insert("observables".into(), Value::Array(per_obs));
    let t = &mut report.tolerances;
    t.insert("n_corr".into(), json!(opts.n_corr));
    t.insert("n_terms".into(), json!(opts.n_terms));
    t.insert("variance_fd_step".into(), json!(e.variance_fd_step));
    t.insert("variance_rel_tol".into(), json!(e.variance_rel_tol));
    t.insert("term_i_tol".into(), json!(TERM_I_TOL));
    t.insert("negative_variance".into(), json!(NEGATIVE_VARIANCE_TOL));
    Ok(report)
}

fn clt(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle) -> Result<Report, CliError> {
    let n = &cfg.numerics;
    let e = &cfg.experiment;
    let opts = variance_options(cfg);
    let mut report = Report::new(&VARIANCE_HEADER);
    let mut samples = Table::new(&["observable", "trial", "value"]);
    let mut per_obs = Vec::new();
    let path = sample_path(&res.driving, e.clt_n.max(n.n_pullback), 0)?;
    for (name, obs) in &res.observables {
        let v = sigma2(c, &res.driving, obs, e.clt_eps, &opts)?;
        let r = clt_empirical(
            c,
            obs,
            e.clt_eps,
            &path,
            e.clt_n,
            e.clt_trials,
            v.sigma2,
            n.n_pullback,
            res.driving.seed,
        )?;
        if r.ks_stat > e.clt_ks_tol {
            report
                .disagreements
                .push(format!("{name}: KS distance {} above {}", r.ks_stat, e.clt_ks_tol));
        }
        report.table.push(vec![
            name.as_str().into(),
            e.clt_eps.into(),
            v.sigma2.into(),
            v.stderr.into(),
            Cell::Empty,
            Cell::Empty,
            r.ks_stat.into(),
        ]);
        for (t, x) in r.samples.iter().enumerate() {
            samples.push(vec![name.as_str().into(), t.into(), (*x).into()]);
        }
        per_obs.push(json!({
            "observable": name,
            "sigma2": v.sigma2,
            "stderr": v.stderr,
            "ks_stat": r.ks_stat,
        }));
    }
    report.extra.push(("clt_samples".into(), samples));
    let s = &mut report.summary;
    s.insert("eps".into(), json!(e.clt_eps));
    s.insert("n".into(), json!(e.clt_n));
    s.insert("trials".into(), json!(e.clt_trials));
    s.insert("observables".into(), Value::Array(per_obs));
    let t = &mut report.tolerances;
    t.insert("clt_ks_tol".into(), json!(e.clt_ks_tol));
    t.insert("n_corr".into(), json!(opts.n_corr));
    Ok(report)
}

fn spectrum(cfg: &ExperimentConfig, res: &Resolved, c: &Cocycle) -> Result<Report, CliError> {
    let e = &cfg.experiment;
    let mut report = Report::new(&[
        "eps",
        "n",
        "decay_ratio",
        "decay_bound",
        "log_norm",
        "lyapunov",
    ]);
    let horizon = e.decay_n_max.max(e.lyapunov_n);
    let mut per_eps = Vec::new();
    for &eps in &e.lyapunov_eps {
        let d = decay(cfg, res, c, eps)?;
        let profiles = try_par_map(e.lyapunov_paths.max(1), |i| {
            let path = sample_path(&res.driving, e.lyapunov_n, i as u64)?;
            log_norm_profile(c, &path, eps, 0, e.lyapunov_n)
        })?;
        let mean_log: Vec<f64> = (0..=e.lyapunov_n)
            .map(|k| profiles.iter().map(|p| p[k]).sum::<f64>() / profiles.len() as f64)
            .collect();
        for k in 0..=horizon {
            let ratio = d.ratios.get(k).copied();
            let log = mean_log.get(k).copied();
            report.table.push(vec![
                eps.into(),
                k.into(),
                ratio.into(),
                ratio.map(|_| d.bound(k)).into(),
                log.into(),
                log.filter(|_| k > 0).map(|l| l / k as f64).into(),
            ]);
        }
        let n = e.lyapunov_n;
        let per_path: Vec<f64> = profiles.iter().map(|p| p[n] / n as f64).collect();
        // slope over the second half of the horizon, free of the O(1/n)
        // contribution of the initial transient
        let half = n / 2;
        let increment = (mean_log[n] - mean_log[half]) / (n - half) as f64;
        per_eps.push(json!({
            "eps": eps,
            "decay": decay_json(&d),
            "lyapunov": mean_log[n] / n as f64,
            "lyapunov_increment": increment,
            "lyapunov_max_abs": per_path.iter().map(|l| l.abs()).fold(0.0, f64::max),
            "lyapunov_per_path": per_path,
        }));
    }
    let s = &mut report.summary;
    s.insert("lyapunov_n".into(), json!(e.lyapunov_n));
    s.insert("phase_resolution".into(), json!(phase_resolution()));
    s.insert("by_eps".into(), Value::Array(per_eps));
    let t = &mut report.tolerances;
    t.insert("decay_samples".into(), json!(e.decay_samples));
    t.insert("decay_n_max".into(), json!(e.decay_n_max));
    t.insert(
        "decay_floor".into(),
        json!(quenched_core::cocycle::DECAY_FLOOR),
    );
    Ok(report)
}
