//! Command-line driver for `phfock`: JSON configuration, report files and the verification catalog.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "phfock", version, about = "Toeplitz operators on truncated pluriharmonic Fock spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every verb. They take precedence over the config file,
/// which takes precedence over built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for the numerical kernels
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
    /// Quadrature tolerance
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
    /// Seed of the random sample clouds
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,
    /// Run only these verification checks (repeatable)
    #[arg(long, global = true, value_name = "CHECK_ID")]
    pub only: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Evaluate reproducing kernels at point pairs
    Kernel,
    /// Lattice ball masses and Carleson verdicts
    Carleson,
    /// Assemble truncated Toeplitz matrices and their spectra
    Toeplitz,
    /// Berezin transform profile of a measure
    Berezin,
    /// Run the verification catalog
    Verify,
}

pub fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        out: common.out.clone(),
        tol: common.tol,
        seed: common.seed,
        only: common.only.clone(),
    });
    config.validate()?;
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(k) = cli.common.threads {
        if k == 0 {
            return Err(CliError::schema("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let config = load_config(&cli.common)?;
    match cli.command {
        Command::Kernel => commands::cmd_kernel(&config),
        Command::Carleson => commands::cmd_carleson(&config),
        Command::Toeplitz => commands::cmd_toeplitz(&config),
        Command::Berezin => commands::cmd_berezin(&config),
        Command::Verify => verify::cmd_verify(&config),
    }
}
