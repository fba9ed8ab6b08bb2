//! `freefall` command-line scenario runner.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for
//! configuration or I/O errors and 3 when a numerical guard trips.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use freefall::qubitphase::UnitSystem;

use crate::config::{ConfigError, ScenarioKind};
use crate::output::RunReport;

#[derive(Debug, Parser)]
#[command(
    name = "freefall",
    version,
    about = "Quantum free-fall scenario runner"
)]
struct Cli {
    /// Worker threads for parameter sweeps and Wigner rows.
    #[arg(long, global = true, env = "FREEFALL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its CSV tables and JSON summary.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Force SI units (c = 2.99792458e8 m/s) for the phase formulas.
        #[arg(long)]
        si: bool,
    },
    /// Parse and validate a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long)]
        si: bool,
    },
    /// List the available scenarios.
    ListScenarios,
}

enum Failure {
    Config(String),
    Guard(freefall::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

fn units(cfg: UnitSystem, si: bool) -> UnitSystem {
    if si {
        UnitSystem::Si
    } else {
        cfg
    }
}

fn run(path: &Path, out_dir: &Path, si: bool) -> Result<bool, Failure> {
    let prepared = config::prepare(config::load(path)?)?;
    let units = units(prepared.config.units, si);
    let start = Instant::now();
    let outcome = scenarios::run(&prepared, units).map_err(Failure::Guard)?;
    log::info!(
        "{} finished in {:.3} s",
        prepared.config.scenario.name(),
        start.elapsed().as_secs_f64()
    );

    std::fs::create_dir_all(out_dir)?;
    let prefix = prepared.prefix().to_string();
    let mut files = Vec::new();
    for table in &outcome.tables {
        let written = table.write(out_dir, &prefix)?;
        files.push(written.file_name().unwrap().to_string_lossy().into_owned());
    }
    let passed = outcome.checks.iter().all(|c| c.passed);
    let mut config = prepared.config.clone();
    config.units = units;
    let report = RunReport {
        scenario: prepared.config.scenario.name().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        config,
        checks: outcome.checks,
        results: outcome.results,
        files,
        passed,
    };
    let summary = report.write(out_dir, &prefix)?;

    for c in &report.checks {
        println!(
            "{} {:<28} {:e} {} {:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.limit
        );
    }
    println!("summary: {}", summary.display());
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match cli.command {
        Command::ListScenarios => {
            for s in ScenarioKind::ALL {
                println!("{:<12} {}", s.name(), s.summary());
            }
            return ExitCode::SUCCESS;
        }
        Command::Validate { config, si } => match config::load(&config).and_then(config::prepare) {
            Ok(p) => {
                println!(
                    "ok: {} ({:?} units)",
                    p.config.scenario.name(),
                    units(p.config.units, si)
                );
                return ExitCode::SUCCESS;
            }
            Err(e) => Err(Failure::from(e)),
        },
        Command::Run {
            config,
            out_dir,
            si,
        } => run(&config, &out_dir, si),
    };

    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(e)) => {
            eprintln!("guard tripped [{}]: {e}", e.guard_name());
            ExitCode::from(3)
        }
    }
}
