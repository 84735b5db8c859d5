//! `wipt-opt`: runs rate-energy, scaling, PAPR and oracle-validation
//! experiments from a JSON config.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "wipt-opt", version, about)]
struct Cli {
    /// Worker threads for the parallel loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the top-level `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the closed-form harvester output with the time-domain oracle.
    Validate {
        /// Five instances instead of twenty, same tolerances.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write `validate.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Schema {
                path: "--threads".into(),
                message: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = config::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let base = config.parent().map(PathBuf::from).unwrap_or_default();
            let out = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            run::run(&cfg, &base, &out)
        }
        Command::Validate { quick, seed, out } => {
            let mut cfg: ExperimentConfig = config::parse(r#"{"mode": "validate"}"#)?;
            debug_assert_eq!(cfg.mode, Mode::Validate);
            if quick {
                cfg.validate.instances = 5;
            }
            if let Some(out) = &out {
                std::fs::create_dir_all(out)?;
            }
            let checks = run::run_validate(
                cfg.validate.instances,
                cfg.validate.symbol_draws,
                seed.unwrap_or(cfg.seed),
                &cfg,
                out.as_deref(),
            )?;
            run::finish_validate(&checks)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
