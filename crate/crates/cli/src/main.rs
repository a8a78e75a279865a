//! `bcblab`: experiments on border-collision bifurcations that create many
//! coexisting chaotic attractors.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::Format;

#[derive(Debug, Parser)]
#[command(name = "bcblab", version, about)]
struct Cli {
    /// JSON file with run parameters; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// RNG seed for all sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "BCBLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Number of coexisting attractors N[k,n].
    Count(RunConfig),
    /// N[k,n] for k = 2..10, n = 2..6.
    Table,
    /// Whether (a_L, a_R) lies in S_k, with the critical orbit and bands.
    RegionCheck(RunConfig),
    /// Build every trapping region and verify its box maps.
    BuildVerify(RunConfig),
    /// Sweep mu: fixed point for mu < 0, labelled attractor samples for mu > 0.
    Bifurcate(RunConfig),
    /// Labelled orbit tails for phase portraits.
    Phase(RunConfig),
    /// Lyapunov spectrum along one orbit.
    Lyapunov(RunConfig),
    /// Stable fixed point on the mu < 0 side.
    FixedPoint(RunConfig),
}

impl Command {
    fn default_format(&self) -> Format {
        match self {
            Command::Table | Command::Bifurcate(_) | Command::Phase(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Invalid("`threads` must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    let format = cli.format.unwrap_or_else(|| cli.command.default_format());
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let resolve = |flags: &RunConfig| {
        let mut cfg = base.clone().overlay(flags);
        if cli.seed.is_some() {
            cfg.seed = cli.seed;
        }
        cfg
    };
    let outcome = match &cli.command {
        Command::Count(f) => commands::count(&resolve(f), format),
        Command::Table => commands::table(format),
        Command::RegionCheck(f) => commands::region_check(&resolve(f), format),
        Command::BuildVerify(f) => commands::build_verify(&resolve(f), format),
        Command::Bifurcate(f) => commands::bifurcate(&resolve(f), format),
        Command::Phase(f) => commands::phase(&resolve(f), format),
        Command::Lyapunov(f) => commands::lyapunov(&resolve(f), format),
        Command::FixedPoint(f) => commands::fixed_point(&resolve(f), format),
    }?;
    output::write(&outcome.output, cli.out.as_deref())?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bcblab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
