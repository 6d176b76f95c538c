//! Command-line entry point: data generation, training, evaluation and
//! ablation comparison, with full run-artifact persistence.

mod commands;
mod manifest;
mod plot;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Desk-scale planar-quadruped locomotion laboratory.
#[derive(Parser)]
#[command(name = "gaitlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the scripted expert dataset.
    GenData {
        /// Run configuration file (key = value). `GAITLAB_CONFIG` overrides;
        /// defaults apply when neither is given.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a policy against the expert dataset.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Expert dataset file produced by gen-data.
        #[arg(long)]
        dataset: PathBuf,
        /// Variant: full | no_sacc | no_constraints | vanilla_amp.
        #[arg(long, default_value = "full")]
        ablation: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for manifest, metrics log and checkpoints.
        #[arg(long)]
        out: PathBuf,
        /// Override the configured iteration count.
        #[arg(long)]
        iterations: Option<usize>,
        /// Write a checkpoint every N iterations (0 = only the final one).
        #[arg(long, default_value_t = 0)]
        checkpoint_every: usize,
    },
    /// Evaluate a checkpoint: tracking profiles, FGD, sprint violations,
    /// plots.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoint to evaluate (or an oracle stub).
        #[arg(long)]
        checkpoint: PathBuf,
        /// Expert dataset for the FGD reference population.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for the report and figures.
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge evaluation reports into one ablation table.
    Compare {
        /// Report files from eval runs.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Optional path for the merged CSV (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData { config, seed, out } => commands::gen_data(config, seed, &out),
        Command::Train { config, dataset, ablation, seed, out, iterations, checkpoint_every } => {
            commands::train(config, &dataset, &ablation, seed, &out, iterations, checkpoint_every)
        }
        Command::Eval { config, checkpoint, dataset, seed, out } => {
            commands::eval(config, &checkpoint, &dataset, seed, &out)
        }
        Command::Compare { reports, out } => commands::compare(&reports, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
