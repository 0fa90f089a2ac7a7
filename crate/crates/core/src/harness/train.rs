use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::{gen_delayed_recall, gen_gaussian_frames, split, Sequence, SplitSpec};
use crate::error::{Error, Result};
use crate::harness::config::{DatasetSpec, LossReduction, ModelKind, TrainConfig};
use crate::layers::{
    flatten, network_backward, network_forward, Activation, AffineLayer, LstmCell, Network, Parameters,
    Stage, StabilizerMode,
};
use crate::optim::{sgd_step, LrSchedule, ScheduleDecision, SgdState};
use crate::tensor::{Matrix, Rng};

const INIT_STREAM: u64 = 10;
const ORDER_STREAM: u64 = 11;
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// CV loss improved by less than the configured threshold.
    Converged,
    /// The learning-rate schedule ran out of patience.
    EarlyStop,
    MaxEpochs,
    /// A loss, gradient or parameter became non-finite.
    Diverged,
    /// The run could not be carried out at all.
    Failed,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::EarlyStop => "early_stop",
            StopReason::MaxEpochs => "max_epochs",
            StopReason::Diverged => "diverged",
            StopReason::Failed => "failed",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            StopReason::Converged,
            StopReason::EarlyStop,
            StopReason::MaxEpochs,
            StopReason::Diverged,
            StopReason::Failed,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| Error::Parse(format!("unknown stop reason `{s}`")))
    }
}

/// Metrics after one epoch. Epoch 0 is the untrained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Learning rate used during this epoch.
    pub lr: f64,
    pub train_ce: f64,
    pub cv_ce: f64,
    pub cv_frame_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub epochs: Vec<EpochRecord>,
    pub final_epoch: usize,
    pub stop_reason: StopReason,
    /// Why a diverged run stopped.
    pub failure: Option<String>,
    pub wall_time: Duration,
}

impl TrainRecord {
    pub fn diverged(&self) -> bool {
        self.stop_reason == StopReason::Diverged
    }

    /// CV cross-entropy after the last epoch; `None` for a diverged run.
    pub fn final_cv_ce(&self) -> Option<f64> {
        self.last_finished().map(|e| e.cv_ce)
    }

    pub fn final_frame_acc(&self) -> Option<f64> {
        self.last_finished().map(|e| e.cv_frame_acc)
    }

    fn last_finished(&self) -> Option<&EpochRecord> {
        if self.diverged() {
            None
        } else {
            self.epochs.last()
        }
    }

    /// Bitwise equality of everything except the wall time.
    pub fn same_run(&self, other: &TrainRecord) -> bool {
        let bits = |e: &EpochRecord| {
            (
                e.epoch,
                e.lr.to_bits(),
                e.train_ce.to_bits(),
                e.cv_ce.to_bits(),
                e.cv_frame_acc.to_bits(),
            )
        };
        self.final_epoch == other.final_epoch
            && self.stop_reason == other.stop_reason
            && self.failure == other.failure
            && self.epochs.len() == other.epochs.len()
            && self.epochs.iter().zip(&other.epochs).all(|(a, b)| bits(a) == bits(b))
    }
}

/// A finished run together with the model it produced.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: TrainRecord,
    pub network: Network,
}

/// Train and CV sequences of a dataset spec.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Vec<Sequence>,
    pub cv: Vec<Sequence>,
    pub input_dim: usize,
    pub num_classes: usize,
}

pub fn prepare_data(spec: &DatasetSpec, cv_fraction: f64) -> Result<PreparedData> {
    let (sequences, input_dim, num_classes, seed) = match spec {
        DatasetSpec::GaussianFrames(s) => {
            let ds = gen_gaussian_frames(s)?;
            (ds.to_sequences(), ds.feature_dim, ds.num_classes, s.seed)
        }
        DatasetSpec::DelayedRecall(s) => {
            let ds = gen_delayed_recall(s)?;
            (ds.sequences, ds.feature_dim, ds.num_classes, s.seed)
        }
    };
    let (train, cv) = split(&sequences, SplitSpec { cv_fraction, seed })?;
    Ok(PreparedData {
        train,
        cv,
        input_dim,
        num_classes,
    })
}

/// Fresh model for `config`. Weights are uniform in `±init_scale / √fan_in`,
/// biases and betas start at zero.
pub fn build_network(config: &TrainConfig, input_dim: usize, num_classes: usize, rng: &mut Rng) -> Result<Network> {
    let m = &config.model;
    let half_width = |fan_in: usize| m.init_scale / (fan_in as f64).sqrt();
    let mut stages = Vec::with_capacity(m.depth + 1);
    let mut width_in = input_dim;
    for _ in 0..m.depth {
        stages.push(match m.kind {
            ModelKind::Dnn => Stage::Affine(AffineLayer::init(
                width_in,
                m.width,
                m.stabilizer,
                m.activation,
                half_width(width_in),
                rng,
            )?),
            ModelKind::Lstm => Stage::Lstm(LstmCell::init(
                width_in,
                m.width,
                m.stabilizer,
                half_width(width_in + 2 * m.width),
                rng,
            )?),
        });
        width_in = m.width;
    }
    let out_mode = if m.stabilize_output { m.stabilizer } else { StabilizerMode::None };
    let output = if m.zero_output_layer {
        AffineLayer::new(
            Matrix::zeros(num_classes, width_in),
            crate::tensor::Vector::zeros(num_classes),
            out_mode,
            Activation::Linear,
        )?
    } else {
        AffineLayer::init(width_in, num_classes, out_mode, Activation::Linear, half_width(width_in), rng)?
    };
    stages.push(Stage::Affine(output));
    Network::new(stages)
}

/// Mean cross-entropy and frame accuracy over `data`.
pub fn evaluate(net: &Network, data: &[Sequence]) -> Result<(f64, f64)> {
    let (mut loss, mut frames, mut correct) = (0.0, 0usize, 0usize);
    for chunk in data.chunks(EVAL_CHUNK) {
        let pass = network_forward(net, chunk)?;
        loss += pass.loss_sum;
        frames += pass.frames;
        correct += pass.correct(chunk);
    }
    if frames == 0 {
        return Err(Error::InvalidArgument("evaluation set has no frames".into()));
    }
    let ce = loss / frames as f64;
    if !ce.is_finite() {
        return Err(Error::NonFinite("evaluation cross-entropy".into()));
    }
    Ok((ce, correct as f64 / frames as f64))
}

enum Halt {
    Stop(StopReason),
    Diverged(String),
}

macro_rules! finite {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(Error::NonFinite(what)) => return Ok(Halt::Diverged(what)),
            Err(e) => return Err(e),
        }
    };
}

/// Runs `config` to completion. Divergence ends the run early and is
/// reported in the record; only invalid configurations are errors.
pub fn train(config: &TrainConfig) -> Result<TrainRecord> {
    Ok(train_model(config)?.record)
}

pub fn train_model(config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let data = prepare_data(&config.dataset, config.cv_fraction)?;
    train_on(config, &data)
}

/// Like [`train_model`] on data that was already prepared from `config.dataset`.
pub fn train_on(config: &TrainConfig, data: &PreparedData) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut net = build_network(
        config,
        data.input_dim,
        data.num_classes,
        &mut Rng::stream(config.seed, INIT_STREAM),
    )?;
    let mut epochs = Vec::new();
    let halt = run_epochs(config, data, &mut net, &mut epochs)?;
    let (stop_reason, failure) = match halt {
        Halt::Stop(r) => (r, None),
        Halt::Diverged(what) => (StopReason::Diverged, Some(format!("non-finite {what}"))),
    };
    let record = TrainRecord {
        final_epoch: epochs.last().map_or(0, |e: &EpochRecord| e.epoch),
        epochs,
        stop_reason,
        failure,
        wall_time: start.elapsed(),
    };
    Ok(TrainOutcome { record, network: net })
}

fn run_epochs(
    config: &TrainConfig,
    data: &PreparedData,
    net: &mut Network,
    epochs: &mut Vec<EpochRecord>,
) -> Result<Halt> {
    let mut sgd = SgdState::new(net, config.initial_lr, config.momentum)?.with_frozen_betas(config.freeze_betas);
    let mut schedule = LrSchedule::new(config.initial_lr, config.patience)?;
    let mut order_rng = Rng::stream(config.seed, ORDER_STREAM);

    let (train_ce, _) = finite!(evaluate(net, &data.train));
    let (cv_ce, cv_frame_acc) = finite!(evaluate(net, &data.cv));
    epochs.push(EpochRecord {
        epoch: 0,
        lr: sgd.lr(),
        train_ce,
        cv_ce,
        cv_frame_acc,
    });
    schedule.observe_cv(cv_ce)?;

    for epoch in 1..=config.max_epochs {
        let lr = sgd.lr();
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        order_rng.shuffle(&mut order);
        let (mut loss, mut frames) = (0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Sequence> = chunk.iter().map(|&i| data.train[i].clone()).collect();
            let pass = finite!(network_forward(net, &batch));
            if !pass.loss.is_finite() {
                return Ok(Halt::Diverged(format!("training loss in epoch {epoch}")));
            }
            loss += pass.loss_sum;
            frames += pass.frames;
            let mut grads = finite!(network_backward(net, &pass.cache));
            if config.loss_reduction == LossReduction::Sum {
                let n = pass.frames as f64;
                grads.visit_mut(&mut |_, _, values| values.iter_mut().for_each(|g| *g *= n));
            }
            finite!(sgd_step(net, &grads, &mut sgd));
        }
        if flatten(&*net).iter().any(|v| !v.is_finite()) {
            return Ok(Halt::Diverged(format!("parameters after epoch {epoch}")));
        }
        let (cv_ce, cv_frame_acc) = finite!(evaluate(net, &data.cv));
        epochs.push(EpochRecord {
            epoch,
            lr,
            train_ce: loss / frames as f64,
            cv_ce,
            cv_frame_acc,
        });

        let best_before = schedule.best();
        match schedule.observe_cv(cv_ce)? {
            ScheduleDecision::Stop => return Ok(Halt::Stop(StopReason::EarlyStop)),
            ScheduleDecision::Halved(next) => sgd.set_lr(next)?,
            ScheduleDecision::Continue => {
                let stalled = best_before.is_some_and(|b| b - cv_ce < config.min_improvement);
                if config.min_improvement > 0.0 && stalled {
                    return Ok(Halt::Stop(StopReason::Converged));
                }
            }
        }
    }
    Ok(Halt::Stop(StopReason::MaxEpochs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{nearest_mean_accuracy, GaussianFramesSpec};
    use crate::harness::config::ModelSpec;

    fn config() -> TrainConfig {
        TrainConfig {
            model: ModelSpec {
                kind: ModelKind::Dnn,
                width: 16,
                depth: 2,
                activation: Activation::Sigmoid,
                stabilizer: StabilizerMode::None,
                stabilize_output: true,
                zero_output_layer: false,
                init_scale: 1.0,
            },
            initial_lr: 0.1,
            momentum: 0.9,
            batch_size: 16,
            loss_reduction: LossReduction::Mean,
            max_epochs: 5,
            patience: 3,
            seed: 4,
            dataset: DatasetSpec::GaussianFrames(GaussianFramesSpec {
                num_classes: 4,
                feature_dim: 6,
                n: 400,
                class_separation: 3.0,
                noise_sigma: 1.0,
                seed: 1,
            }),
            cv_fraction: 0.25,
            min_improvement: 0.0,
            freeze_betas: false,
        }
    }

    #[test]
    fn zero_epochs_with_zero_output_layer_is_uniform() {
        let mut c = config();
        c.max_epochs = 0;
        c.model.zero_output_layer = true;
        let r = train(&c).unwrap();
        assert_eq!(r.epochs.len(), 1);
        assert_eq!(r.stop_reason, StopReason::MaxEpochs);
        assert!((r.epochs[0].cv_ce - 4f64.ln()).abs() < 1e-12);
        assert!((r.epochs[0].train_ce - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_configs_give_identical_records() {
        let c = config();
        let a = train(&c).unwrap();
        let b = train(&c).unwrap();
        assert!(a.same_run(&b));
        let mut other = c.clone();
        other.seed = 5;
        assert!(!a.same_run(&train(&other).unwrap()));
    }

    #[test]
    fn records_satisfy_their_invariants() {
        let mut c = config();
        c.model.stabilizer = StabilizerMode::LayerShared;
        c.max_epochs = 12;
        c.initial_lr = 0.5;
        let r = train(&c).unwrap();
        for pair in r.epochs.windows(2) {
            assert!(pair[1].lr <= pair[0].lr);
            let k = (c.initial_lr / pair[1].lr).log2();
            assert_eq!(k, k.round());
        }
        for e in &r.epochs {
            assert!(e.train_ce >= 0.0 && e.cv_ce >= 0.0);
            assert!((0.0..=1.0).contains(&e.cv_frame_acc));
        }
        assert_eq!(r.final_epoch, r.epochs.last().unwrap().epoch);
    }

    #[test]
    fn easy_gaussian_task_is_learned() {
        let mut c = config();
        c.max_epochs = 20;
        let r = train(&c).unwrap();
        let DatasetSpec::GaussianFrames(spec) = &c.dataset else { unreachable!() };
        let oracle = nearest_mean_accuracy(&gen_gaussian_frames(spec).unwrap());
        let acc = r.final_frame_acc().unwrap();
        assert!(acc > 0.9, "accuracy {acc}, nearest-mean oracle {oracle}");
        assert!(acc <= oracle + 0.05);
    }

    #[test]
    fn huge_learning_rate_is_recorded_as_divergence() {
        let mut c = config();
        c.initial_lr = 1e300;
        c.model.activation = Activation::Linear;
        c.max_epochs = 10;
        let r = train(&c).unwrap();
        assert_eq!(r.stop_reason, StopReason::Diverged);
        assert!(r.failure.is_some());
        assert_eq!(r.final_cv_ce(), None);
    }

    #[test]
    fn frozen_zero_betas_reproduce_the_plain_run() {
        let plain = train(&config()).unwrap();
        let mut c = config();
        c.model.stabilizer = StabilizerMode::Independent;
        c.freeze_betas = true;
        assert!(train(&c).unwrap().same_run(&plain));
    }

    #[test]
    fn lstm_model_trains_on_delayed_recall() {
        let mut c = config();
        c.model.kind = ModelKind::Lstm;
        c.model.width = 6;
        c.model.depth = 1;
        c.model.stabilizer = StabilizerMode::GateShared;
        c.dataset = DatasetSpec::DelayedRecall(crate::data::DelayedRecallSpec {
            seq_len: 6,
            delay: 2,
            alphabet: 3,
            n: 40,
            seed: 3,
        });
        c.max_epochs = 3;
        let out = train_model(&c).unwrap();
        assert_eq!(out.record.epochs.len(), 4);
        assert!(matches!(out.network.stages()[0], Stage::Lstm(_)));
    }

    #[test]
    fn stop_reasons_parse_back() {
        for r in [StopReason::Converged, StopReason::EarlyStop, StopReason::MaxEpochs, StopReason::Diverged] {
            assert_eq!(r.as_str().parse::<StopReason>().unwrap(), r);
        }
        assert!("done".parse::<StopReason>().is_err());
    }
}
