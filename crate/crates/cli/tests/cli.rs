use std::fs;
use std::path::Path;
use std::process::Command;

use quenched_cli::{run, ExperimentConfig, RunOptions, Status, Subcommand};
use serde_json::Value;

const ALL: [Subcommand; 7] = [
    Subcommand::Density,
    Subcommand::Stability,
    Subcommand::Response,
    Subcommand::Annealed,
    Subcommand::Variance,
    Subcommand::Clt,
    Subcommand::Spectrum,
];

/// The default family at a size that keeps every subcommand well under a
/// second or two.
fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.numerics.order = 24;
    c.numerics.samples = 6;
    c.numerics.n_corr = 15;
    c.experiment.density_paths = 2;
    c.experiment.density_grid = 32;
    c.experiment.response_paths = 3;
    c.experiment.observable_side_paths = 1;
    c.experiment.clt_n = 300;
    c.experiment.clt_trials = 400;
    c.experiment.clt_ks_tol = 1.0;
    c.experiment.lyapunov_n = 20;
    c.experiment.lyapunov_paths = 2;
    c.experiment.decay_samples = 3;
    c.experiment.variance_rel_tol = 1.0;
    c
}

fn shipped(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

fn run_in(dir: &Path, command: Subcommand, config: ExperimentConfig) -> quenched_cli::Outcome {
    run(&RunOptions {
        command,
        config,
        out: dir.to_path_buf(),
        seed: None,
        samples: None,
    })
    .unwrap()
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quenched"))
}

#[test]
fn every_subcommand_writes_its_artifacts() {
    for cmd in ALL {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_in(dir.path(), cmd, small());
        assert_eq!(outcome.status, Status::Ok, "{}: {}", cmd.name(), outcome.summary);
        for file in [format!("{}.csv", cmd.name()), "summary.json".into(), "manifest.json".into()] {
            assert!(dir.path().join(&file).exists(), "{} missing {file}", cmd.name());
        }
        let manifest: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["seed"], 1);
        assert!(manifest["tolerances"]["pullback_tol"].is_number());
        let echoed: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
        assert_eq!(echoed, small());
    }
}

#[test]
fn csv_headers_are_fixed() {
    let expected = [
        (Subcommand::Stability, "eps,path_id,diff_w,diff_h1,residual,n_used"),
        (
            Subcommand::Response,
            "path_id,observable,value_series,value_observable_side,value_fd,tail_bound,n_terms",
        ),
        (
            Subcommand::Variance,
            "observable,eps,sigma2,stderr,dsigma2_formula,dsigma2_fd,ks_stat",
        ),
    ];
    for (cmd, header) in expected {
        let dir = tempfile::tempdir().unwrap();
        run_in(dir.path(), cmd, small());
        let text = fs::read_to_string(dir.path().join(format!("{}.csv", cmd.name()))).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    for cmd in ALL {
        let mut bodies = Vec::new();
        for workers in [1, 2, 8] {
            let dir = tempfile::tempdir().unwrap();
            let mut config = small();
            config.numerics.workers = workers;
            let outcome = run_in(dir.path(), cmd, config);
            let csvs: Vec<Vec<u8>> = outcome
                .files
                .iter()
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .map(|p| fs::read(p).unwrap())
                .collect();
            let summary = fs::read(dir.path().join("summary.json")).unwrap();
            bodies.push((csvs, summary));
        }
        assert!(bodies.windows(2).all(|w| w[0] == w[1]), "{}", cmd.name());
    }
}

#[test]
fn seed_and_samples_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&RunOptions {
        command: Subcommand::Stability,
        config: small(),
        out: dir.path().to_path_buf(),
        seed: Some(99),
        samples: Some(3),
    })
    .unwrap();
    assert_eq!(outcome.summary["results"]["samples"], 3);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["config"]["driving"]["seed"], 99);
}

#[test]
fn drift_family_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_in(dir.path(), Subcommand::Stability, shipped("drift.toml"));
    assert_eq!(outcome.summary["results"]["exponent"], "degenerate");
    let text = fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    for line in text.lines().skip(1) {
        let diff: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(diff <= 1e-12);
    }
}

#[test]
fn response_reports_series_and_finite_difference() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default();
    config.experiment.response_paths = 2;
    config.experiment.observable_side_paths = 1;
    config.experiment.decay_samples = 3;
    let outcome = run_in(dir.path(), Subcommand::Response, config);
    let r = &outcome.summary["results"];
    let series = r["value_series"].as_f64().unwrap();
    let fd = r["value_fd"].as_f64().unwrap();
    assert!((series - fd).abs() <= 1e-3 * fd.abs());
    assert!(r["value_observable_side"].is_number());
}

#[test]
fn doubling_config_reproduces_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_in(dir.path(), Subcommand::Response, shipped("doubling.toml"));
    let series = outcome.summary["results"]["value_series"].as_f64().unwrap();
    assert!((series + std::f64::consts::PI).abs() <= 1e-10);
    let outcome = run_in(dir.path(), Subcommand::Variance, shipped("doubling.toml"));
    let s2 = outcome.summary["results"]["observables"][0]["sigma2"].as_f64().unwrap();
    assert!((s2 - 0.5).abs() <= 1e-10);
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn exit_code_one_for_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[family]\nmaps = [{ degree = 2, sin = [0.4] }]\n");
    let status = binary()
        .args(["density", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let status = binary().args(["nonsense"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = binary()
        .args(["density", "--quiet", "--config", "/nonexistent.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn exit_code_two_for_degenerate_variance() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[numerics]\norder = 16\nsamples = 4\n[experiment]\nclt_n = 100\nclt_trials = 100\n\
         [[observables]]\nname = \"flat\"\npoly = { constant = 1.0 }\n",
    );
    let status = binary()
        .args(["clt", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn exit_code_three_for_cross_check_disagreement() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[numerics]\norder = 24\n[experiment]\nresponse_paths = 2\nobservable_side_paths = 0\n\
         decay_samples = 3\nresponse_rel_tol = 1e-30\n",
    );
    let out = dir.path().join("out");
    let status = binary()
        .args(["response", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "cross_check_disagreement");
    assert!(!summary["disagreements"].as_array().unwrap().is_empty());
}

#[test]
fn binary_runs_with_default_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[numerics]\norder = 16\n[experiment]\ndensity_paths = 1\ndensity_grid = 8\n",
    );
    let out = dir.path().join("out");
    let status = binary()
        .args(["density", "--quiet", "--seed", "4", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(text.lines().count(), 9);
}
