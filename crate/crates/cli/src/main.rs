//! `ramsey-adapt`: simulate adaptive Ramsey magnetometry from the command line.
//!
//! Settings come from built-in defaults, then an optional JSON file
//! (`--config`), then flags. Results land in `--out` next to a manifest;
//! standard output carries one JSON summary line, progress goes to stderr.

mod commands;
mod config;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{CommonArgs, PsoArgs, RtArgs, Settings, SEED_ENV};

#[derive(Parser)]
#[command(name = "ramsey-adapt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single estimation run, written as a JSON trace
    Run(CommonArgs),
    /// Ensemble Holevo variance at every detuning of a grid
    Sweep(CommonArgs),
    /// Sensitivity against total time over a range of N
    Scaling(CommonArgs),
    /// Train phase-increment tables with particle swarm optimization
    PsoTrain {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        pso: PsoArgs,
    },
    /// Best sensitivity per protocol under averaged room-temperature readout
    RtCompare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        rt: RtArgs,
    },
}

fn execute(cli: Cli) -> Result<serde_json::Value> {
    let env_seed = std::env::var(SEED_ENV).ok();
    let (common, pso, rt) = match &cli.command {
        Command::Run(c) | Command::Sweep(c) | Command::Scaling(c) => (c, PsoArgs::default(), RtArgs::default()),
        Command::PsoTrain { common, pso } => (common, pso.clone(), RtArgs::default()),
        Command::RtCompare { common, rt } => (common, PsoArgs::default(), rt.clone()),
    };
    let settings = Settings::resolve(common, &pso, &rt, env_seed.as_deref())?;
    if let Some(workers) = settings.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("starting worker pool")?;
    }
    match cli.command {
        Command::Run(_) => commands::run(&settings),
        Command::Sweep(_) => commands::sweep(&settings),
        Command::Scaling(_) => commands::scaling(&settings),
        Command::PsoTrain { .. } => commands::pso_train(&settings),
        Command::RtCompare { .. } => commands::rt_compare_cmd(&settings),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
