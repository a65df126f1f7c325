use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairmtl_cli::experiment::{run_experiment, write_report, ExperimentConfig};
use fairmtl_cli::{evaluate, fairify, read_config, synth, train, CliError, EvaluateConfig, FairifyConfig, TrainConfig};
use fairmtl_core::data::SynthConfig;

/// Multi-task learning with demographic-parity post-processing.
#[derive(Parser)]
#[command(name = "fairmtl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a network on the training split and pick task weights on the
    /// validation split.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit the fairness calibrator on the pool split and write base and fair
    /// predictions for every row.
    Fairify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Bootstrap performance and unfairness of a predictions file.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the missing-label grid and write report.json and report.txt.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { config, out, seed } => {
            let mut cfg: SynthConfig = read_config(config.as_deref())?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            synth(&cfg, &out)
        }
        Command::Train { data, config, out, seed } => {
            let mut cfg: TrainConfig = read_config(config.as_deref())?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            train(&data, &cfg, &out).map(|_| ())
        }
        Command::Fairify {
            model,
            data,
            config,
            out,
            seed,
        } => {
            let mut cfg: FairifyConfig = read_config(config.as_deref())?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            fairify(&model, &data, &cfg, &out)
        }
        Command::Evaluate {
            predictions,
            labels,
            config,
            out,
            seed,
        } => {
            let mut cfg: EvaluateConfig = read_config(config.as_deref())?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            evaluate(&predictions, &labels, &cfg, &out).map(|_| ())
        }
        Command::Experiment { config, out, seed } => {
            let mut cfg: ExperimentConfig = read_config(config.as_deref())?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let report = run_experiment(&cfg)?;
            print!("{}", report.table());
            write_report(&report, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
