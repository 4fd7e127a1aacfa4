//! Command-line pipeline for the tutor simulator: warm-start generation,
//! policy training, cohort simulation, the three analyses, early warning and
//! a combined report bundle.

pub mod commands;
pub mod error;
pub mod float;
pub mod manifest;
pub mod reports;
pub mod schema;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "tutorsim",
    version,
    about = "Simulate an AI tutor cohort and analyse it"
)]
pub struct Cli {
    /// Directory for all inputs and outputs.
    #[arg(long, global = true, env = "TUTORSIM_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
    /// Root seed for the command.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the labeled warm-start set.
    GenWarmstart {
        #[arg(long, default_value_t = 2500)]
        n: usize,
    },
    /// Train the feedback policy on the warm-start set.
    TrainPolicy {
        /// Warm-start CSV (default: <out-dir>/warmstart.csv).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        /// Hidden layer widths.
        #[arg(long, num_args = 2, value_delimiter = ',', default_values_t = [64, 32])]
        hidden: Vec<usize>,
    },
    /// Run the policy against a simulated cohort.
    Simulate {
        /// Policy JSON (default: <out-dir>/policy.json).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        students: usize,
        #[arg(long, default_value_t = 8)]
        turns: u32,
        /// Override the sampling temperature stored with the model.
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Run one of the three analyses on an interaction log.
    Analyze {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        rq: u8,
        /// Interaction log (default: <out-dir>/interactions.csv).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Early/late window in turns.
        #[arg(long, default_value_t = 3)]
        window: u32,
        /// Number of learner profiles (RQ3).
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Trust weight in the alternative responsiveness score (RQ3).
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        /// Also fit the interaction-level feedback classifier (RQ3).
        #[arg(long)]
        interaction_level: bool,
    },
    /// Fit the interaction-level early-warning model and export risk scores.
    EarlyWarning {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Bundle every stage manifest and report into one JSON document.
    Report {
        /// Bundle path (default: <out-dir>/bundle.json).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

pub fn run(cli: &Cli) -> CliResult<()> {
    commands::run(cli)
}
