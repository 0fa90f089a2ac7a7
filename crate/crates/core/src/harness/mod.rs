//! Training runs, learning-rate sweeps, sensitivity summaries, weight-norm
//! diagnostics and their file formats.

pub mod commands;
mod config;
pub mod export;
mod norms;
mod sweep;
mod train;

pub use config::{DatasetSpec, LossReduction, ModelKind, ModelSpec, TrainConfig};
pub use norms::{norm_report, norm_report_from_checkpoint, render_norms, GroupRatios, NormEntry, NormGroup, NormReport};
pub use sweep::{
    check_protocol, model_label, render_summary, stabilized_mode, summarize, sweep, ArmSummary, SeedSpread,
    SensitivitySummary, SweepCell, SweepResult,
};
pub use train::{
    build_network, evaluate, prepare_data, train, train_model, train_on, EpochRecord, PreparedData, StopReason,
    TrainOutcome, TrainRecord,
};
