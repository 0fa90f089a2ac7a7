use std::path::PathBuf;
use std::process::ExitCode;

use betastab::harness::commands::{render_gradcheck, render_train_summary, run_gradcheck, run_sweep, run_train, CheckTarget};
use betastab::harness::{norm_report_from_checkpoint, render_norms, TrainConfig};
use betastab::layers::StabilizerMode;
use clap::{Parser, Subcommand};

/// Training and learning-rate sensitivity experiments for beta-stabilized networks.
#[derive(Debug, Parser)]
#[command(name = "betastab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write its record, summary and checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every initial learning rate and seed with and without the stabilizer.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Initial learning rates, e.g. `0.8,0.1,0.01`.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value = "affine")]
        layer: CheckTarget,
        /// Check a single stabilizer mode instead of all four.
        #[arg(long)]
        mode: Option<StabilizerMode>,
        /// Number of random instances per mode.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Maximum relative error; defaults to 1e-5 for affine and 1e-4 otherwise.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print the Frobenius norm of every weight matrix in a checkpoint.
    Norms {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

const VALIDATION: u8 = 1;
const RUN_FAILURE: u8 = 2;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Train { config, out } => {
            let config = match TrainConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(VALIDATION, e),
            };
            match run_train(&config, &out) {
                Ok(outcome) => {
                    print!("{}", render_train_summary(&config, &outcome));
                    println!("wall time       {:.2}s", outcome.record.wall_time.as_secs_f64());
                    if outcome.record.failure.is_some() {
                        ExitCode::from(RUN_FAILURE)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(RUN_FAILURE, e),
            }
        }
        Command::Sweep { config, grid, seeds, out } => {
            let config = match TrainConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(VALIDATION, e),
            };
            if let Some(lr) = grid.iter().find(|lr| !(**lr > 0.0 && lr.is_finite())) {
                return fail(VALIDATION, format!("learning rates must be positive, got {lr}"));
            }
            match run_sweep(&config, &grid, &seeds, &out) {
                Ok(_) => {
                    match std::fs::read_to_string(out.join("summary.txt")) {
                        Ok(text) => print!("{text}"),
                        Err(e) => return fail(RUN_FAILURE, e),
                    }
                    ExitCode::SUCCESS
                }
                Err(e @ betastab::Error::Config(_)) => fail(VALIDATION, e),
                Err(e) => fail(RUN_FAILURE, e),
            }
        }
        Command::Gradcheck { layer, mode, seeds, tol } => {
            let modes = mode.map_or_else(|| StabilizerMode::ALL.to_vec(), |m| vec![m]);
            let tol = tol.unwrap_or_else(|| layer.default_tolerance());
            if seeds == 0 || !(tol > 0.0 && tol.is_finite()) {
                return fail(VALIDATION, "--seeds and --tol must be positive");
            }
            match run_gradcheck(layer, &modes, seeds, tol) {
                Ok(runs) => {
                    print!("{}", render_gradcheck(&runs));
                    if runs.iter().all(|r| r.report.pass) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(RUN_FAILURE)
                    }
                }
                Err(e) => fail(RUN_FAILURE, e),
            }
        }
        Command::Norms { checkpoint } => match norm_report_from_checkpoint(&checkpoint) {
            Ok(report) => {
                print!("{}", render_norms(&report));
                ExitCode::SUCCESS
            }
            Err(e) => fail(VALIDATION, e),
        },
    }
}
