//! Command-line front end for the bclab experiments.

mod commands;
mod config;

use clap::{Parser, Subcommand};

pub use config::{CommandName, Flags, Settings};

/// Mean-field Blume-Capel experiments.
#[derive(Parser)]
#[command(name = "bclab", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the second- and first-order curves.
    PhaseDiagram(Flags),
    /// Thermodynamic magnetization m(beta, K) as JSON.
    Magnetize(Flags),
    /// Exact E|S_n/n| for each n.
    FiniteSize(Flags),
    /// Metropolis estimate of E|S_n/n| for each n.
    Mc(Flags),
    /// Scaled magnetization table along a sequence.
    SequenceRun(Flags),
    /// Moderate-deviation rate estimates along a sequence.
    MdpCheck(Flags),
    /// Kolmogorov distance to the weak limit along a sequence.
    WeakLimit(Flags),
    /// Finite-difference derivatives of the first-order curve at the tricritical point.
    Conjectures(Flags),
}

impl Command {
    fn split(self) -> (CommandName, Flags) {
        match self {
            Command::PhaseDiagram(f) => (CommandName::PhaseDiagram, f),
            Command::Magnetize(f) => (CommandName::Magnetize, f),
            Command::FiniteSize(f) => (CommandName::FiniteSize, f),
            Command::Mc(f) => (CommandName::Mc, f),
            Command::SequenceRun(f) => (CommandName::SequenceRun, f),
            Command::MdpCheck(f) => (CommandName::MdpCheck, f),
            Command::WeakLimit(f) => (CommandName::WeakLimit, f),
            Command::Conjectures(f) => (CommandName::Conjectures, f),
        }
    }
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("BCLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => anyhow::bail!("BCLAB_THREADS: expected a positive integer, got {v:?}"),
        },
        Err(_) => Ok(None),
    }
}

/// Resolve settings and execute one command.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let (name, flags) = cli.command.split();
    let settings = Settings::resolve(name, flags)?;
    match thread_count(settings.threads)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| anyhow::anyhow!("threads: {e}"))?
            .install(|| commands::dispatch(name, settings)),
        None => commands::dispatch(name, settings),
    }
}
