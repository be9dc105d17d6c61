//! `settle` — runs the steady-state experiment suite from declarative
//! TOML configs and writes CSV/JSON artifacts for every figure and table.
//!
//! Exit codes: 0 on success, 1 when a solve fails (histories are still
//! written), 2 for config errors.

// Validation guards are written negated so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::report::Emitter;

#[derive(Parser)]
#[command(
    name = "settle",
    version,
    about = "Steady-state experiments on black-box time-steppers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        /// TOML experiment description.
        #[arg(long)]
        config: PathBuf,
        /// Dotted-path override, e.g. --set solver.atol=1e-10; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check a config file and list every problem with it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_SOLVER: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, set } => run(&config, &set),
        Command::Validate { config } => validate(&config),
    }
}

fn load_checked(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, Vec<String>> {
    let cfg = config::load(path, overrides).map_err(|e| vec![e])?;
    let issues = cfg.validate();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(issues)
    }
}

fn run(path: &Path, overrides: &[String]) -> ExitCode {
    let cfg = match load_checked(path, overrides) {
        Ok(cfg) => cfg,
        Err(issues) => {
            for issue in &issues {
                eprintln!("config error: {issue}");
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let started = Instant::now();
    let mut em = match Emitter::new(&cfg.output_dir) {
        Ok(em) => em,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    let name = cfg.experiment.name();
    match experiments::run(&cfg, &mut em) {
        Ok(solver_ok) => {
            let status = if solver_ok { "ok" } else { "solver_failure" };
            match em.finish(name, status, started.elapsed().as_secs_f64()) {
                Ok(summary) => {
                    println!("{name}: {status} ({})", summary.display());
                    if solver_ok {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_SOLVER)
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_SOLVER)
                }
            }
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            let _ = em.finish(name, "error", started.elapsed().as_secs_f64());
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn validate(path: &Path) -> ExitCode {
    match config::load(path, &[]) {
        Ok(cfg) => {
            let issues = cfg.validate();
            if issues.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                for issue in &issues {
                    println!("{issue}");
                }
                ExitCode::from(EXIT_CONFIG)
            }
        }
        Err(e) => {
            println!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
