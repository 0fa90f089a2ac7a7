use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::TrainConfig;
use crate::harness::train::{prepare_data, train_on, StopReason, TrainRecord};
use crate::layers::StabilizerMode;

/// One `(initial_lr, stabilizer, seed)` cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub init_lr: f64,
    pub stabilized: bool,
    pub seed: u64,
    pub final_cv_ce: Option<f64>,
    pub final_frame_acc: Option<f64>,
    pub epochs: usize,
    pub stop_reason: StopReason,
    pub failure: Option<String>,
    /// Full trace; absent for cells read back from CSV.
    pub record: Option<TrainRecord>,
}

impl SweepCell {
    pub fn from_record(init_lr: f64, stabilized: bool, seed: u64, record: TrainRecord) -> Self {
        SweepCell {
            init_lr,
            stabilized,
            seed,
            final_cv_ce: record.final_cv_ce(),
            final_frame_acc: record.final_frame_acc(),
            epochs: record.final_epoch,
            stop_reason: record.stop_reason,
            failure: record.failure.clone(),
            record: Some(record),
        }
    }

    fn failed(init_lr: f64, stabilized: bool, seed: u64, reason: String) -> Self {
        SweepCell {
            init_lr,
            stabilized,
            seed,
            final_cv_ce: None,
            final_frame_acc: None,
            epochs: 0,
            stop_reason: StopReason::Failed,
            failure: Some(reason),
            record: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.final_cv_ce.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Free-form model description used in reports, e.g. `dnn-sigmoid-3x32`.
    pub label: String,
    /// Ordered by learning rate, then stabilizer flag, then seed, each in
    /// the order requested.
    pub cells: Vec<SweepCell>,
}

/// Mode used by the stabilized arm of a sweep over `base`.
pub fn stabilized_mode(base: &TrainConfig) -> StabilizerMode {
    match base.model.stabilizer {
        StabilizerMode::None => StabilizerMode::Independent,
        m => m,
    }
}

pub fn model_label(config: &TrainConfig) -> String {
    let m = &config.model;
    match m.kind {
        crate::harness::ModelKind::Dnn => {
            format!("dnn-{}-{}x{}", m.activation.as_str(), m.depth, m.width)
        }
        crate::harness::ModelKind::Lstm => format!("lstm-{}x{}", m.depth, m.width),
    }
}

/// Fails unless every cell config equals `base` up to the initial learning
/// rate, seed and stabilizer mode, and the mode takes only the two arm values.
pub fn check_protocol(base: &TrainConfig, cells: &[TrainConfig]) -> Result<()> {
    let on = stabilized_mode(base);
    for (i, c) in cells.iter().enumerate() {
        let mode = c.model.stabilizer;
        if mode != on && mode != StabilizerMode::None {
            return Err(Error::Config(format!("sweep cell {i} uses stabilizer {}", mode.as_str())));
        }
        if c.cell(base.initial_lr, base.model.stabilizer, base.seed) != *base {
            return Err(Error::Config(format!(
                "sweep cell {i} differs from the base config in more than learning rate and seed"
            )));
        }
    }
    Ok(())
}

/// Trains every `(lr, flag, seed)` combination. Cells run in parallel, each
/// with its own model and random streams, and are assembled in grid order.
pub fn sweep(base: &TrainConfig, lr_grid: &[f64], flags: &[bool], seeds: &[u64]) -> Result<SweepResult> {
    base.validate()?;
    if lr_grid.is_empty() || flags.is_empty() || seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one learning rate, flag and seed".into()));
    }
    if let Some(lr) = lr_grid.iter().find(|lr| !(**lr > 0.0 && lr.is_finite())) {
        return Err(Error::Config(format!("learning rates must be positive, got {lr}")));
    }
    let on = stabilized_mode(base);
    let mut keys = Vec::new();
    for &lr in lr_grid {
        for &flag in flags {
            for &seed in seeds {
                keys.push((lr, flag, seed));
            }
        }
    }
    for (i, a) in keys.iter().enumerate() {
        if keys[..i].iter().any(|b| a.0.to_bits() == b.0.to_bits() && a.1 == b.1 && a.2 == b.2) {
            return Err(Error::Config(format!("duplicate sweep cell lr={} seed={}", a.0, a.2)));
        }
    }
    let configs: Vec<TrainConfig> = keys
        .iter()
        .map(|&(lr, flag, seed)| base.cell(lr, if flag { on } else { StabilizerMode::None }, seed))
        .collect();
    check_protocol(base, &configs)?;

    let data = prepare_data(&base.dataset, base.cv_fraction)?;
    let cells = keys
        .par_iter()
        .zip(configs.par_iter())
        .map(|(&(lr, flag, seed), config)| match train_on(config, &data) {
            Ok(out) => SweepCell::from_record(lr, flag, seed, out.record),
            Err(e) => SweepCell::failed(lr, flag, seed, e.to_string()),
        })
        .collect();
    Ok(SweepResult {
        label: model_label(base),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSpread {
    pub seed: u64,
    /// `max − min` of final CV CE over the grid points that finished;
    /// `None` when fewer than two did.
    pub spread: Option<f64>,
    pub points: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub stabilized: bool,
    pub seeds: Vec<SeedSpread>,
    pub mean_spread: Option<f64>,
    pub best_final_ce: Option<f64>,
    pub worst_final_ce: Option<f64>,
    /// No seed of this arm has a spread.
    pub incomparable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySummary {
    pub label: String,
    /// Unstabilized arm first when present.
    pub arms: Vec<ArmSummary>,
}

impl SensitivitySummary {
    pub fn arm(&self, stabilized: bool) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.stabilized == stabilized)
    }
}

/// Spread of the final CV cross-entropy over the learning-rate grid, per arm
/// and seed. Failed cells are left out of the spread and counted separately.
pub fn summarize(sweep: &SweepResult) -> Result<SensitivitySummary> {
    let mut arms = Vec::new();
    for stabilized in [false, true] {
        let cells: Vec<&SweepCell> = sweep.cells.iter().filter(|c| c.stabilized == stabilized).collect();
        if cells.is_empty() {
            continue;
        }
        let mut lrs: Vec<u64> = cells.iter().map(|c| c.init_lr.to_bits()).collect();
        lrs.sort_unstable();
        lrs.dedup();
        if lrs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "the {} arm has {} grid point(s); a spread needs at least two",
                arm_name(stabilized),
                lrs.len()
            )));
        }
        let mut seed_order: Vec<u64> = Vec::new();
        for c in &cells {
            if !seed_order.contains(&c.seed) {
                seed_order.push(c.seed);
            }
        }
        let seeds: Vec<SeedSpread> = seed_order
            .into_iter()
            .map(|seed| {
                let ces: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.seed == seed)
                    .filter_map(|c| c.final_cv_ce)
                    .collect();
                let failed = cells.iter().filter(|c| c.seed == seed && !c.ok()).count();
                SeedSpread {
                    seed,
                    spread: (ces.len() >= 2).then(|| spread(&ces)),
                    points: ces.len(),
                    failed,
                }
            })
            .collect();
        let spreads: Vec<f64> = seeds.iter().filter_map(|s| s.spread).collect();
        let finished: Vec<f64> = cells.iter().filter_map(|c| c.final_cv_ce).collect();
        arms.push(ArmSummary {
            stabilized,
            mean_spread: (!spreads.is_empty()).then(|| spreads.iter().sum::<f64>() / spreads.len() as f64),
            incomparable: spreads.is_empty(),
            seeds,
            best_final_ce: finished.iter().copied().reduce(f64::min),
            worst_final_ce: finished.iter().copied().reduce(f64::max),
        });
    }
    Ok(SensitivitySummary {
        label: sweep.label.clone(),
        arms,
    })
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

pub(crate) fn arm_name(stabilized: bool) -> &'static str {
    if stabilized {
        "with-stabilizer"
    } else {
        "without-stabilizer"
    }
}

/// Plain-text report of a summary.
pub fn render_summary(summary: &SensitivitySummary) -> String {
    let num = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    let mut out = format!("learning-rate sensitivity: {}\n", summary.label);
    for arm in &summary.arms {
        let _ = writeln!(
            out,
            "  {:<19} mean spread {}  best {}  worst {}{}",
            arm_name(arm.stabilized),
            num(arm.mean_spread),
            num(arm.best_final_ce),
            num(arm.worst_final_ce),
            if arm.incomparable { "  (incomparable)" } else { "" },
        );
        for s in &arm.seeds {
            let _ = writeln!(
                out,
                "    seed {:<6} spread {}  points {}  failed {}",
                s.seed,
                num(s.spread),
                s.points,
                s.failed
            );
        }
    }
    if let (Some(off), Some(on)) = (summary.arm(false), summary.arm(true)) {
        if let (Some(a), Some(b)) = (off.mean_spread, on.mean_spread) {
            let _ = writeln!(out, "  stabilized spread {} unstabilized", if b <= a { "<=" } else { ">" });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cell(lr: f64, stabilized: bool, seed: u64, ce: Option<f64>) -> SweepCell {
        SweepCell {
            init_lr: lr,
            stabilized,
            seed,
            final_cv_ce: ce,
            final_frame_acc: ce.map(|_| 0.5),
            epochs: 10,
            stop_reason: if ce.is_some() { StopReason::EarlyStop } else { StopReason::Diverged },
            failure: None,
            record: None,
        }
    }

    #[test]
    fn spread_is_max_minus_min() {
        let sweep = SweepResult {
            label: "t".into(),
            cells: vec![
                cell(0.8, false, 1, Some(2.0)),
                cell(0.1, false, 1, Some(3.0)),
                cell(0.01, false, 1, Some(2.5)),
            ],
        };
        let s = summarize(&sweep).unwrap();
        assert_eq!(s.arms.len(), 1);
        assert_eq!(s.arms[0].mean_spread, Some(1.0));
        assert_eq!(s.arms[0].best_final_ce, Some(2.0));
        assert_eq!(s.arms[0].worst_final_ce, Some(3.0));
    }

    #[test]
    fn identical_values_give_zero_spread() {
        let sweep = SweepResult {
            label: "t".into(),
            cells: [0.8, 0.1, 0.01].map(|lr| cell(lr, true, 3, Some(1.25))).to_vec(),
        };
        assert_eq!(summarize(&sweep).unwrap().arms[0].mean_spread, Some(0.0));
    }

    #[test]
    fn failed_cells_are_excluded_and_all_failed_arm_is_incomparable() {
        let sweep = SweepResult {
            label: "t".into(),
            cells: vec![
                cell(0.8, false, 1, None),
                cell(0.1, false, 1, None),
                cell(0.8, true, 1, None),
                cell(0.1, true, 1, Some(2.0)),
                cell(0.01, true, 1, Some(2.2)),
            ],
        };
        let s = summarize(&sweep).unwrap();
        let off = s.arm(false).unwrap();
        assert!(off.incomparable);
        assert_eq!(off.mean_spread, None);
        assert_eq!(off.seeds[0].failed, 2);
        let on = s.arm(true).unwrap();
        assert!((on.mean_spread.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(on.seeds[0].failed, 1);
        assert!(render_summary(&s).contains("incomparable"));
    }

    #[test]
    fn seed_average() {
        let sweep = SweepResult {
            label: "t".into(),
            cells: vec![
                cell(0.8, true, 1, Some(1.0)),
                cell(0.8, true, 2, Some(1.0)),
                cell(0.1, true, 1, Some(2.0)),
                cell(0.1, true, 2, Some(4.0)),
            ],
        };
        let arm = summarize(&sweep).unwrap().arms.remove(0);
        assert_eq!(arm.seeds.iter().map(|s| s.spread).collect::<Vec<_>>(), vec![Some(1.0), Some(3.0)]);
        assert_eq!(arm.mean_spread, Some(2.0));
    }

    #[test]
    fn single_grid_point_cannot_be_summarized() {
        let sweep = SweepResult {
            label: "t".into(),
            cells: vec![cell(0.8, true, 1, Some(1.0)), cell(0.8, true, 2, Some(1.0))],
        };
        assert!(summarize(&sweep).is_err());
    }
}
