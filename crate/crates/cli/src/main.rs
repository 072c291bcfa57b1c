mod commands;
mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::{Params, RunConfig};
use kacgap::KacError;
use std::process::ExitCode;

/// Rejected input; maps to exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Parser)]
#[command(name = "kacgap", version, about = "Spectral-gap bounds and simulation for the Kac walk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    /// ∏_{j≥3} (1 − (4j+1)/((j−1)²(j+1)))
    UniformFactor,
    /// ∏_{k=11}^{10⁶} (1 − A_k/k²) at the given γ
    Tail,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower bounds on the gap at one (N, γ)
    Bounds,
    /// Infinite and truncated products behind the bounds
    Products {
        #[arg(long, value_enum, default_value = "uniform-factor")]
        demo: Demo,
    },
    /// Exact spectrum at γ = 0 on symmetric polynomials
    Spectrum,
    /// Variational upper bound and linearized gap
    Variational,
    /// Kac walk trajectory (csv) or autocorrelation gap estimate (json)
    Simulate,
    /// Eigenvalues of the block correlation operator
    Correlation,
    /// Sandwich table over a grid of N
    Report,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Invalid>().is_some() {
            return 2;
        }
        if let Some(k) = cause.downcast_ref::<KacError>() {
            return match k {
                KacError::Numerical(_) => 3,
                _ => 2,
            };
        }
    }
    3
}

fn threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("KACGAP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Invalid(format!("KACGAP_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    threads()?;
    let cfg = RunConfig::resolve(&cli.params)?;
    match cli.command {
        Command::Bounds => commands::bounds(&cfg),
        Command::Products { demo } => commands::products(&cfg, demo),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Variational => commands::variational(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Correlation => commands::correlation(&cfg),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
