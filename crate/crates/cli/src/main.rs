use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use quenched_cli::{load_config, run, RunOptions, Subcommand};

/// Numerical experiments on random compositions of expanding circle maps.
#[derive(Debug, Parser)]
#[command(name = "quenched", version)]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML experiment config; the built-in default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the driving seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the Monte Carlo path count from the config.
    #[arg(long)]
    samples: Option<usize>,
    /// Do not list written files on stderr.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = load_config(args.config.as_deref()).and_then(|config| {
        run(&RunOptions {
            command: args.command,
            config,
            out: args.out.clone(),
            seed: args.seed,
            samples: args.samples,
        })
    });
    match result {
        Ok(outcome) => {
            if !args.quiet {
                for f in &outcome.files {
                    eprintln!("wrote {}", f.display());
                }
                for key in ["hypothesis_failures", "disagreements"] {
                    for msg in outcome.summary[key].as_array().into_iter().flatten() {
                        eprintln!("{}: {}", key.trim_end_matches('s').replace('_', " "), msg.as_str().unwrap_or(""));
                    }
                }
                eprintln!("status: {}", outcome.summary["status"].as_str().unwrap_or(""));
            }
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
