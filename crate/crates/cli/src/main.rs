//! `qsearch`: random-search circuit synthesis experiments.

mod commands;
mod output;
mod spec;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use qsearch_core::{GateKind, TaskKind};

use crate::commands::Outcome;
use crate::spec::{SizeRange, SpecArgs};

#[derive(Parser)]
#[command(name = "qsearch", version, about = "Quantum circuit synthesis by random combinatorial search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Entangler lower bounds and configuration counts.
    Bounds {
        /// sp or u; both when omitted.
        #[arg(long)]
        task: Option<TaskKind>,
        /// cnot or b; both when omitted.
        #[arg(long)]
        kind: Option<GateKind>,
        /// Qubit counts, `lo..hi` or a single value.
        #[arg(long, default_value = "2..8")]
        n: SizeRange,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Optimize random configurations of one size; export the best perfect circuit.
    /// Exit status 2 when none is perfect.
    Synthesize(SpecArgs),
    /// Success probability against circuit size, with Bayesian error bars.
    Sweep(SpecArgs),
    /// Histogram of optimized fidelities at one circuit size.
    Histogram {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = qsearch_core::stats::DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
    },
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Bounds { task, kind, n, format } => {
            let tasks = task.map_or(vec![TaskKind::StatePrep, TaskKind::UnitarySynthesis], |t| vec![t]);
            let kinds = kind.map_or(vec![GateKind::Cnot, GateKind::B], |k| vec![k]);
            let rows = commands::bounds_rows(&tasks, &kinds, &n.sizes())?;
            match format {
                Format::Csv => print!("{}", commands::bounds_csv(&rows)),
                Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
            }
            Ok(Outcome::Done)
        }
        Command::Synthesize(args) => commands::synthesize(&args.resolve()?),
        Command::Sweep(args) => commands::sweep(&args.resolve()?),
        Command::Histogram { spec, bins } => commands::histogram(&spec.resolve()?, bins),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotFound) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
