//! Command-line front end for the feature-fusion pipeline.

mod commands;
mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{Overrides, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "molfuse",
    version,
    about = "Fuse molecular featurizations with independent vector analysis and train kernel ridge regressors"
)]
struct Cli {
    /// Run configuration (INI-style). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the fusion mode: regular | ica | iva | single:<name>.
    #[arg(long, global = true)]
    mode: Option<String>,

    /// Worker threads for trials/combinations (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build SOB/WE/CME feature tables from SMILES and XYZ inputs.
    Featurize,
    /// Fit the configured fusion on the full dataset and write artifacts.
    Fuse,
    /// Run the fusion + KRR pipeline under nested cross-validation.
    Train,
    /// Learning curve over seeded subsamples with a power-law fit.
    Curve,
    /// Train every k-subset of the input tables with regular and IVA fusion.
    Sweep,
    /// Synthetic source-recovery benchmark (IVA vs per-dataset ICA).
    Bench,
    /// Mixing-matrix weight report from a previous run's artifacts.
    Report,
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Featurize => "featurize",
            Command::Fuse => "fuse",
            Command::Train => "train",
            Command::Curve => "curve",
            Command::Sweep => "sweep",
            Command::Bench => "bench",
            Command::Report => "report",
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        mode: cli.mode.clone(),
        jobs: cli.jobs,
    };
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path, &overrides)?,
        None => RunConfig::from_text("", &overrides)?,
    };

    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }

    match cli.command {
        Command::Featurize => commands::featurize(&cfg),
        Command::Fuse => commands::fuse(&cfg),
        Command::Train => commands::train(&cfg).map(|_| ()),
        Command::Curve => commands::curve(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Bench => commands::bench_command(&cfg),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.stage();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error in stage {stage}: {err:#}");
            ExitCode::FAILURE
        }
    }
}
