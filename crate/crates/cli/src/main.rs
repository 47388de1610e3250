//! `superproc`: kernel tables, expansion errors, particle simulations and
//! replicated verification experiments driven by a flat config file.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stable_superprocess::config::ConfigMap;
use stable_superprocess::Error;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SUPERPROC_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "superproc",
    version,
    about = "Supercritical alpha-stable superprocess toolkit"
)]
struct Cli {
    /// Flat `section.key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; nothing is written outside it.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "superproc-out")]
    out: PathBuf,
    /// Base seed (overrides `sim.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replicate parallelism (overrides `run.threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key=value` override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expansion constants for every multi-index up to `theta.max_order`.
    Theta,
    /// Table of the kernel derivative `kernel.k` at time `kernel.t`.
    Kernel,
    /// Scaled sup error of the truncated expansion along `expand.t_grid`.
    Expand,
    /// Replicated trajectories with the functionals in `simulate.functions`.
    Simulate,
    /// Experiments listed in `verify.experiments`.
    Verify,
}

/// Exit statuses.
mod status {
    pub const OTHER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const CAPACITY: u8 = 3;
    pub const CHECK_FAILED: u8 = 4;
}

fn status_of(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::Domain(_) | Error::Integrability { .. } => status::CONFIG,
        Error::Capacity(_) => status::CAPACITY,
        Error::Io(_) => status::OTHER,
    }
}

fn load_config(cli: &Cli) -> Result<ConfigMap, Error> {
    let mut config = match &cli.config {
        Some(path) => ConfigMap::from_file(path)?,
        None => ConfigMap::new(),
    };
    for assignment in &cli.overrides {
        config.set(assignment)?;
    }
    if let Some(seed) = cli.seed {
        config.insert("sim.seed", seed);
    }
    if let Some(threads) = cli.threads {
        config.insert("run.threads", threads);
    }
    Ok(config)
}

fn configure_threads(config: &ConfigMap) -> Result<(), Error> {
    let threads: usize = config.parsed_or("run.threads", 0)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("run.threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|config| {
        configure_threads(&config)?;
        let out = output::OutDir::new(&cli.out);
        match cli.command {
            Command::Theta => commands::theta(&config, &out),
            Command::Kernel => commands::kernel(&config, &out),
            Command::Expand => commands::expand(&config, &out),
            Command::Simulate => commands::simulate(&config, &out),
            Command::Verify => commands::verify(&config, &out),
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(status::CHECK_FAILED),
        Err(error) => {
            eprintln!("superproc: {error}");
            if matches!(error, Error::Config(_)) {
                eprintln!("run 'superproc --help' for usage");
            }
            ExitCode::from(status_of(&error))
        }
    }
}
