use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{DelayedRecallSpec, GaussianFramesSpec};
use crate::error::{Error, Result};
use crate::layers::{Activation, StabilizerMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Stack of affine layers applied frame by frame.
    Dnn,
    /// LSTM layers followed by a linear output layer.
    Lstm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Dnn => "dnn",
            ModelKind::Lstm => "lstm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Units per hidden layer (or LSTM cell width).
    pub width: usize,
    /// Number of hidden layers (or stacked LSTM cells).
    pub depth: usize,
    /// Hidden-layer activation for DNNs. LSTM cells ignore it.
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_stabilizer")]
    pub stabilizer: StabilizerMode,
    /// Whether the softmax output layer also carries a beta. By default only
    /// the hidden layers do.
    #[serde(default)]
    pub stabilize_output: bool,
    /// Start the output layer at all zeros, so the initial prediction is uniform.
    #[serde(default)]
    pub zero_output_layer: bool,
    /// Weights start uniform in `±init_scale / √fan_in`.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

/// How a mini-batch gradient combines its frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossReduction {
    /// Gradient of the mean cross-entropy over the batch's frames.
    #[default]
    Mean,
    /// Gradient of the summed cross-entropy, so the learning rate acts per frame.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    GaussianFrames(GaussianFramesSpec),
    DelayedRecall(DelayedRecallSpec),
}

/// Everything a training run depends on.
///
/// The dataset carries its own seed, so replicates over `seed` see the same
/// data and differ only in initialisation and batch order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelSpec,
    pub initial_lr: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub loss_reduction: LossReduction,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    pub seed: u64,
    pub dataset: DatasetSpec,
    #[serde(default = "default_cv_fraction")]
    pub cv_fraction: f64,
    /// Stop as converged once an epoch improves the best CV loss by less
    /// than this. Zero disables the check.
    #[serde(default)]
    pub min_improvement: f64,
    /// Hold every beta at its initial value of zero.
    #[serde(default)]
    pub freeze_betas: bool,
}

fn default_activation() -> Activation {
    Activation::Sigmoid
}
fn default_stabilizer() -> StabilizerMode {
    StabilizerMode::None
}
fn default_init_scale() -> f64 {
    1.0
}
fn default_momentum() -> f64 {
    0.0
}
fn default_batch_size() -> usize {
    32
}
fn default_max_epochs() -> usize {
    50
}
fn default_patience() -> usize {
    3
}
fn default_cv_fraction() -> f64 {
    0.2
}

fn invalid(msg: String) -> Error {
    Error::Config(msg)
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: TrainConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.width == 0 || m.depth == 0 {
            return Err(invalid(format!("model width and depth must be positive, got {}x{}", m.depth, m.width)));
        }
        if !(m.init_scale > 0.0 && m.init_scale.is_finite()) {
            return Err(invalid(format!("init_scale must be positive, got {}", m.init_scale)));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(invalid(format!("initial_lr must be positive, got {}", self.initial_lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be positive".into()));
        }
        if self.patience == 0 {
            return Err(invalid("patience must be positive".into()));
        }
        if !(self.cv_fraction > 0.0 && self.cv_fraction < 1.0) {
            return Err(invalid(format!("cv_fraction must lie in (0, 1), got {}", self.cv_fraction)));
        }
        if !(self.min_improvement >= 0.0 && self.min_improvement.is_finite()) {
            return Err(invalid(format!("min_improvement must be non-negative, got {}", self.min_improvement)));
        }
        match &self.dataset {
            DatasetSpec::GaussianFrames(d) => d.validate(),
            DatasetSpec::DelayedRecall(d) => d.validate(),
        }
        .map_err(|e| invalid(format!("dataset: {e}")))?;
        if let (ModelKind::Dnn, DatasetSpec::DelayedRecall(_)) = (m.kind, &self.dataset) {
            return Err(invalid("a dnn model cannot read delayed-recall sequences".into()));
        }
        Ok(())
    }

    /// Copy that differs only in the initial learning rate, seed and
    /// stabilizer mode.
    pub fn cell(&self, initial_lr: f64, stabilizer: StabilizerMode, seed: u64) -> TrainConfig {
        let mut c = self.clone();
        c.initial_lr = initial_lr;
        c.seed = seed;
        c.model.stabilizer = stabilizer;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"kind": "dnn", "width": 8, "depth": 2},
        "initial_lr": 0.1,
        "seed": 1,
        "dataset": {"kind": "gaussian_frames", "num_classes": 3, "feature_dim": 4,
                    "n": 60, "class_separation": 3.0, "noise_sigma": 1.0, "seed": 2}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = TrainConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.max_epochs, 50);
        assert_eq!(c.patience, 3);
        assert_eq!(c.momentum, 0.0);
        assert_eq!(c.model.activation, Activation::Sigmoid);
        assert_eq!(c.model.stabilizer, StabilizerMode::None);
        assert!(!c.model.stabilize_output);
        assert_eq!(TrainConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        let top = MINIMAL.replacen("\"seed\": 1,", "\"seed\": 1, \"sead\": 1,", 1);
        assert!(matches!(TrainConfig::from_json(&top), Err(Error::Config(_))));
        let model = MINIMAL.replace("\"depth\": 2", "\"depth\": 2, \"dropout\": 0.5");
        assert!(TrainConfig::from_json(&model).is_err());
        let data = MINIMAL.replace("\"seed\": 2", "\"seed\": 2, \"extra\": 0");
        assert!(TrainConfig::from_json(&data).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [
            ("\"initial_lr\": 0.1", "\"initial_lr\": 0"),
            ("\"initial_lr\": 0.1", "\"initial_lr\": -0.1"),
            ("\"width\": 8", "\"width\": 0"),
            ("\"n\": 60", "\"n\": 0"),
            ("\"seed\": 1,", "\"seed\": 1, \"momentum\": 1.0,"),
            ("\"seed\": 1,", "\"seed\": 1, \"cv_fraction\": 1.0,"),
            ("\"seed\": 1,", "\"seed\": 1, \"batch_size\": 0,"),
        ] {
            let text = MINIMAL.replacen(from, to, 1);
            assert!(TrainConfig::from_json(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn cell_changes_only_the_sweep_axes() {
        let base = TrainConfig::from_json(MINIMAL).unwrap();
        let cell = base.cell(0.8, StabilizerMode::Independent, 9);
        assert_eq!(cell.initial_lr, 0.8);
        assert_eq!(cell.seed, 9);
        assert_eq!(cell.cell(0.1, StabilizerMode::None, 1), base);
    }
}
