//! Experiment runner for `quenched-core`.
//!
//! Each subcommand reads an [`config::ExperimentConfig`], runs one
//! experiment inside a worker pool of the configured size and writes
//! `<subcommand>.csv`, `summary.json` and `manifest.json` to the output
//! directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiments::Subcommand;

/// Overall verdict of a run, in exit-code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    HypothesisFailure,
    Disagreement,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::HypothesisFailure => 2,
            Status::Disagreement => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::HypothesisFailure => "hypothesis_failure",
            Status::Disagreement => "cross_check_disagreement",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Subcommand,
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

pub fn run(opts: &RunOptions) -> Result<Outcome, CliError> {
    let mut config = opts.config.clone();
    if let Some(seed) = opts.seed {
        config.driving.seed = seed;
    }
    if let Some(samples) = opts.samples {
        config.numerics.samples = samples;
    }
    let resolved = config.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.numerics.workers)
        .build()?;
    let threads = pool.current_num_threads();
    let report = pool.install(|| experiments::run(opts.command, &config, &resolved))?;

    // a hypothesis failure invalidates the numbers a cross-check compares
    let status = if !report.hypothesis_failures.is_empty() {
        Status::HypothesisFailure
    } else if !report.disagreements.is_empty() {
        Status::Disagreement
    } else {
        Status::Ok
    };

    fs::create_dir_all(&opts.out)?;
    let name = opts.command.name();
    let mut files = Vec::new();
    let mut write_table = |stem: &str, table: &output::Table| -> Result<(), CliError> {
        let path = opts.out.join(format!("{stem}.csv"));
        table.write(&path)?;
        files.push(path);
        Ok(())
    };
    write_table(name, &report.table)?;
    for (stem, table) in &report.extra {
        write_table(stem, table)?;
    }

    let summary = json!({
        "subcommand": name,
        "status": status.label(),
        "hypothesis_failures": report.hypothesis_failures,
        "disagreements": report.disagreements,
        "results": report.summary,
        "tolerances": report.tolerances,
    });
    let summary_path = opts.out.join("summary.json");
    output::write_json(&summary_path, &summary)?;
    files.push(summary_path);

    let manifest = json!({
        "schema_version": config::SCHEMA_VERSION,
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "core_version": quenched_core::VERSION,
        "subcommand": name,
        "seed": config.driving.seed,
        "samples": config.numerics.samples,
        "worker_threads": threads,
        "outputs": files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .chain(["manifest.json".to_owned()])
            .collect::<Vec<_>>(),
        "tolerances": report.tolerances,
        "config": serde_json::to_value(&config)?,
    });
    let manifest_path = opts.out.join("manifest.json");
    output::write_json(&manifest_path, &manifest)?;
    files.push(manifest_path);

    Ok(Outcome {
        status,
        summary,
        files,
    })
}

/// Loads `path`, or the built-in default when absent.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}
