use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ma_cnoma::cli::{self, Overrides, SweepKind};

#[derive(Parser)]
#[command(
    name = "ma-cnoma",
    about = "Movable-antenna cooperative-NOMA downlink experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the DDPG agent and write the learning curve and checkpoint.
    Train {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sweep BS power or mobility-region size over all four schemes.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Scenarios per sweep point.
        #[arg(long)]
        scenarios: Option<usize>,
    },
    /// Compare the trained deterministic policy against the reference
    /// optimizer on held-out scenarios.
    Accuracy {
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Held-out scenarios per power point.
        #[arg(long)]
        scenarios: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Power,
    Region,
}

fn run() -> ma_cnoma::Result<()> {
    match Cli::parse().command {
        Command::Train { config, seed, out_dir } => {
            let artifacts = cli::cmd_train(&config, &Overrides { seed, out_dir, scenarios: None })?;
            println!("learning curve: {}", artifacts.curve_csv.display());
            println!("checkpoint:     {}", artifacts.checkpoint.display());
            println!("final-window mean reward: {:.4}", artifacts.final_window_mean);
        }
        Command::Sweep { config, kind, seed, out_dir, scenarios } => {
            let kind = match kind {
                KindArg::Power => SweepKind::Power,
                KindArg::Region => SweepKind::Region,
            };
            let artifacts = cli::cmd_sweep(&config, kind, &Overrides { seed, out_dir, scenarios })?;
            println!("sweep table: {}", artifacts.sweep_csv.display());
            println!("ordering violations: {}", artifacts.ordering_violations);
        }
        Command::Accuracy { config, checkpoint, seed, out_dir, scenarios } => {
            let artifacts =
                cli::cmd_accuracy(&config, &checkpoint, &Overrides { seed, out_dir, scenarios })?;
            println!("accuracy table: {}", artifacts.accuracy_csv.display());
            for row in &artifacts.rows {
                println!(
                    "P_T = {:>5} dBm: policy {:.4} vs reference {:.4} (ratio {:.3})",
                    row.power_dbm, row.ddpg_mean, row.reference_mean, row.ratio
                );
            }
            println!("aggregate ratio: {:.3}", artifacts.aggregate_ratio);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
