use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod error;
mod manifest;

use commands::{BenchArgs, EvalArgs, GenArgs, ProbeArgs, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "decl", version, about = "Decomposed structured learning over constrained output spaces")]
pub struct Cli {
    /// Seed for every random stream of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// JSON configuration file, or a manifest of an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for benchmark trials.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Train weights on a dataset.
    Train(TrainArgs),
    /// Evaluate weights on a dataset split.
    Eval(EvalArgs),
    /// Check whether a decomposition is exact for a dataset.
    Probe(ProbeArgs),
    /// Run the learning-curve benchmark.
    Bench(BenchArgs),
}

pub struct Globals {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = Globals {
        seed: cli.seed,
        out: cli.out,
        config: cli.config,
        threads: cli.threads,
    };
    let result = match cli.command {
        Command::Gen(args) => commands::gen(&globals, args),
        Command::Train(args) => commands::train(&globals, args),
        Command::Eval(args) => commands::eval(&globals, args),
        Command::Probe(args) => commands::probe(&globals, args),
        Command::Bench(args) => commands::bench(&globals, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
