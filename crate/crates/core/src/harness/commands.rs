//! The work behind each CLI subcommand, writing its files into an output
//! directory.
//!
//! `train` writes `record.csv`, `summary.txt`, `checkpoint.json` and
//! `config.json`. `sweep` writes `sweep.csv`, `summary.txt`, `config.json`,
//! one `records/cellNNN.csv` per cell in sweep order and, when every arm has
//! at least two learning rates, `summary.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gradcheck::{check_model, AffineCase, GradReport, LstmCase, NetworkCase, DEFAULT_EPSILON};
use crate::harness::config::TrainConfig;
use crate::harness::export::{format_real, write_record_csv, write_summary_csv, write_sweep_csv};
use crate::harness::sweep::{arm_name, render_summary, summarize, sweep, SensitivitySummary, SweepResult};
use crate::harness::train::{train_model, TrainOutcome};
use crate::layers::{checkpoint, Activation, StabilizerMode};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn render_train_summary(config: &TrainConfig, outcome: &TrainOutcome) -> String {
    let r = &outcome.record;
    let mut out = String::new();
    let _ = writeln!(out, "model           {}", crate::harness::model_label(config));
    let _ = writeln!(out, "stabilizer      {}", config.model.stabilizer.as_str());
    let _ = writeln!(out, "initial lr      {}", format_real(config.initial_lr));
    let _ = writeln!(out, "seed            {}", config.seed);
    let _ = writeln!(out, "epochs          {}", r.final_epoch);
    let _ = writeln!(out, "stop reason     {}", r.stop_reason);
    if let Some(last) = r.epochs.last() {
        let _ = writeln!(out, "final lr        {}", format_real(last.lr));
    }
    let _ = writeln!(out, "final cv ce     {}", r.final_cv_ce().map_or("n/a".into(), format_real));
    let _ = writeln!(out, "final frame acc {}", r.final_frame_acc().map_or("n/a".into(), format_real));
    if let Some(why) = &r.failure {
        let _ = writeln!(out, "failure         {why}");
    }
    out
}

/// Trains `config` and writes the run's files into `out`.
pub fn run_train(config: &TrainConfig, out: &Path) -> Result<TrainOutcome> {
    config.validate()?;
    let outcome = train_model(config)?;
    create_dir(out)?;
    write_record_csv(&outcome.record.epochs, out.join("record.csv"))?;
    write_text(&out.join("summary.txt"), &render_train_summary(config, &outcome))?;
    write_text(&out.join("config.json"), &config.to_json())?;
    checkpoint::save(&outcome.network, out.join("checkpoint.json"))?;
    Ok(outcome)
}

fn render_sweep(sweep: &SweepResult, summary: Option<&SensitivitySummary>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sweep {}: {} cells", sweep.label, sweep.cells.len());
    for c in &sweep.cells {
        let _ = writeln!(
            out,
            "  lr {:<8} {:<19} seed {:<6} ce {:<10} acc {:<10} epochs {:<4} {}",
            format_real(c.init_lr),
            arm_name(c.stabilized),
            c.seed,
            c.final_cv_ce.map_or("n/a".into(), format_real),
            c.final_frame_acc.map_or("n/a".into(), format_real),
            c.epochs,
            c.stop_reason,
        );
    }
    match summary {
        Some(s) => out.push_str(&render_summary(s)),
        None => out.push_str("no sensitivity summary: an arm has fewer than two learning rates\n"),
    }
    out
}

/// Sweeps both stabilizer arms over `lr_grid` and `seeds`, writing the
/// results into `out`.
pub fn run_sweep(
    base: &TrainConfig,
    lr_grid: &[f64],
    seeds: &[u64],
    out: &Path,
) -> Result<(SweepResult, Option<SensitivitySummary>)> {
    let result = sweep(base, lr_grid, &[false, true], seeds)?;
    let summary = summarize(&result).ok();
    create_dir(out)?;
    write_sweep_csv(&result, out.join("sweep.csv"))?;
    if let Some(s) = &summary {
        write_summary_csv(s, out.join("summary.csv"))?;
    }
    write_text(&out.join("summary.txt"), &render_sweep(&result, summary.as_ref()))?;
    write_text(&out.join("config.json"), &base.to_json())?;
    let records = out.join("records");
    create_dir(&records)?;
    for (i, cell) in result.cells.iter().enumerate() {
        let epochs = cell.record.as_ref().map_or(&[][..], |r| &r.epochs[..]);
        write_record_csv(epochs, records.join(format!("cell{i:03}.csv")))?;
    }
    Ok((result, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckTarget {
    Affine,
    Lstm,
    Network,
}

impl CheckTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckTarget::Affine => "affine",
            CheckTarget::Lstm => "lstm",
            CheckTarget::Network => "network",
        }
    }

    /// Tolerance used when none is given.
    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckTarget::Affine => 1e-5,
            CheckTarget::Lstm | CheckTarget::Network => 1e-4,
        }
    }
}

impl std::str::FromStr for CheckTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(CheckTarget::Affine),
            "lstm" => Ok(CheckTarget::Lstm),
            "network" => Ok(CheckTarget::Network),
            other => Err(Error::InvalidArgument(format!("unknown layer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckRun {
    pub target: CheckTarget,
    pub mode: StabilizerMode,
    /// Activation of affine cases, or a description of the network case.
    pub variant: String,
    pub seed: u64,
    pub report: GradReport,
}

/// Gradient checks on `seeds` random instances of `target` for each mode.
/// Affine layers are checked with every activation, networks as both a
/// sigmoid DNN and an LSTM with an output layer.
pub fn run_gradcheck(
    target: CheckTarget,
    modes: &[StabilizerMode],
    seeds: u64,
    tolerance: f64,
) -> Result<Vec<CheckRun>> {
    if seeds == 0 {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
    }
    let mut runs = Vec::new();
    for &mode in modes {
        for seed in 0..seeds {
            let mut push = |variant: &str, report| {
                runs.push(CheckRun {
                    target,
                    mode,
                    variant: variant.to_string(),
                    seed,
                    report,
                })
            };
            match target {
                CheckTarget::Affine => {
                    for act in [Activation::Sigmoid, Activation::Relu, Activation::Tanh] {
                        let case = AffineCase::random(seed, mode, act);
                        push(act.as_str(), check_model(&case, DEFAULT_EPSILON, tolerance)?);
                    }
                }
                CheckTarget::Lstm => {
                    let case = LstmCase::random(seed, mode);
                    push("lstm", check_model(&case, DEFAULT_EPSILON, tolerance)?);
                }
                CheckTarget::Network => {
                    let dnn = NetworkCase::random_dnn(seed, mode, Activation::Sigmoid);
                    push("dnn-sigmoid", check_model(&dnn, DEFAULT_EPSILON, tolerance)?);
                    let rnn = NetworkCase::random_lstm(seed, mode);
                    push("lstm+affine", check_model(&rnn, DEFAULT_EPSILON, tolerance)?);
                }
            }
        }
    }
    Ok(runs)
}

pub fn render_gradcheck(runs: &[CheckRun]) -> String {
    let mut out = String::new();
    for r in runs {
        let _ = writeln!(
            out,
            "{:<7} {:<12} {:<12} seed {:<4} {}",
            r.target.as_str(),
            r.mode.as_str(),
            r.variant,
            r.seed,
            r.report
        );
    }
    let failed = runs.iter().filter(|r| !r.report.pass).count();
    let _ = writeln!(out, "{} checks, {} failed", runs.len(), failed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradcheck_runs_cover_modes_and_activations() {
        let runs = run_gradcheck(CheckTarget::Affine, &StabilizerMode::ALL, 2, 1e-5).unwrap();
        assert_eq!(runs.len(), 4 * 2 * 3);
        assert!(runs.iter().all(|r| r.report.pass), "{}", render_gradcheck(&runs));
        assert!(run_gradcheck(CheckTarget::Lstm, &StabilizerMode::ALL, 0, 1e-4).is_err());
        assert!(run_gradcheck(CheckTarget::Lstm, &StabilizerMode::ALL, 1, 0.0).is_err());
    }

    #[test]
    fn network_gradcheck_passes() {
        let runs = run_gradcheck(CheckTarget::Network, &[StabilizerMode::GateShared], 2, 1e-4).unwrap();
        assert_eq!(runs.len(), 4);
        assert!(runs.iter().all(|r| r.report.pass), "{}", render_gradcheck(&runs));
    }

    #[test]
    fn targets_parse() {
        for t in [CheckTarget::Affine, CheckTarget::Lstm, CheckTarget::Network] {
            assert_eq!(t.as_str().parse::<CheckTarget>().unwrap(), t);
        }
        assert!("conv".parse::<CheckTarget>().is_err());
    }
}
