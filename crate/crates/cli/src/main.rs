//! `duffing-qsim`: data files behind the quasienergy landscape, the level
//! spectrum, the classical branch curves and the effective damping table.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use duffing_core::lindblad::SteadyMethod;

use commands::CliError;
use config::{Overrides, RunConfig};
use output::Format;

#[derive(Debug, Parser)]
#[command(name = "duffing-qsim", version, about = "Quantum Duffing oscillator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads for sweeps; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_parser = parse_method)]
    method: Option<SteadyMethod>,
    /// Fock-space truncation N.
    #[arg(long, global = true)]
    truncation: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quasienergy g(Q, P) on a phase-space grid with extrema and fixed points.
    Landscape,
    /// Level table, potential cut, featured densities and anticrossings.
    Spectrum,
    /// Classical fixed points along the damping grid.
    FixedPoints,
    /// Effective damping of the metastable states over damping and temperature.
    EtaEff,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_method(s: &str) -> Result<SteadyMethod, String> {
    s.parse().map_err(|e: duffing_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let overrides = Overrides { out: cli.out, format: cli.format, method: cli.method, truncation: cli.truncation };
    let cfg = RunConfig::load(&path, &overrides).map_err(|e| CliError::Config(e.message))?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Landscape => commands::landscape(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::FixedPoints => commands::fixed_points(&cfg),
        Command::EtaEff => commands::eta_eff(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("duffing-qsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
