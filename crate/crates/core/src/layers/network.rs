use serde::{Deserialize, Serialize};

use crate::data::Sequence;
use crate::error::{Error, Result};
use crate::layers::affine::{affine_backward_into, affine_forward, AffineGrads, AffineLayer};
use crate::layers::loss::softmax_xent;
use crate::layers::lstm::{lstm_backward_into, lstm_forward, LstmCell, LstmGrads, LstmStepCache};
use crate::layers::params::{prefixed, ParamKind, Parameters};
use crate::tensor::Vector;

/// One stage of a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stage {
    Affine(AffineLayer),
    Lstm(LstmCell),
}

impl Stage {
    pub fn input_dim(&self) -> usize {
        match self {
            Stage::Affine(l) => l.input_dim(),
            Stage::Lstm(c) => c.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Stage::Affine(l) => l.output_dim(),
            Stage::Lstm(c) => c.hidden_dim(),
        }
    }
}

/// A stack of stages whose last output is read as softmax logits.
///
/// Affine stages act frame by frame, LSTM stages recur over the frames of a
/// sequence. A frame-classification batch is simply a batch of length-one
/// sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageGrads {
    Affine(AffineGrads),
    Lstm(LstmGrads),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads {
    pub stages: Vec<StageGrads>,
}

#[derive(Debug, Clone)]
enum StageCache {
    Affine { inputs: Vec<Vector>, pre: Vec<Vector> },
    Lstm(Vec<LstmStepCache>),
}

#[derive(Debug, Clone)]
struct SequenceCache {
    stages: Vec<StageCache>,
    dlogits: Vec<Vector>,
}

/// Intermediate values of a batch forward pass.
#[derive(Debug, Clone)]
pub struct NetworkCache {
    sequences: Vec<SequenceCache>,
    frames: usize,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Cross-entropy averaged over every frame of the batch.
    pub loss: f64,
    /// Total (not averaged) cross-entropy of the batch.
    pub loss_sum: f64,
    pub frames: usize,
    /// Argmax class per frame, per sequence.
    pub predictions: Vec<Vec<usize>>,
    pub cache: NetworkCache,
}

impl ForwardPass {
    pub fn correct(&self, batch: &[Sequence]) -> usize {
        self.predictions
            .iter()
            .zip(batch)
            .map(|(p, s)| p.iter().zip(&s.labels).filter(|(a, b)| a == b).count())
            .sum()
    }
}

impl Network {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidArgument("a network needs at least one stage".into()));
        }
        for (i, pair) in stages.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(
                    "Network::new",
                    format!("stage {i} output {}", pair[0].output_dim()),
                    format!("stage {} input {}", i + 1, pair[1].input_dim()),
                ));
            }
        }
        Ok(Network { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn stages_mut(&mut self) -> &mut [Stage] {
        &mut self.stages
    }

    pub fn input_dim(&self) -> usize {
        self.stages[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.stages[self.stages.len() - 1].output_dim()
    }

    pub fn zero_grads(&self) -> NetworkGrads {
        NetworkGrads {
            stages: self
                .stages
                .iter()
                .map(|s| match s {
                    Stage::Affine(l) => StageGrads::Affine(l.zero_grads()),
                    Stage::Lstm(c) => StageGrads::Lstm(c.zero_grads()),
                })
                .collect(),
        }
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            stages: Vec<Stage>,
        }
        let raw = Raw::deserialize(d)?;
        Network::new(raw.stages).map_err(serde::de::Error::custom)
    }
}

impl NetworkGrads {
    pub fn add_assign(&mut self, other: &NetworkGrads) -> Result<()> {
        if self.stages.len() != other.stages.len() {
            return Err(Error::shape("NetworkGrads::add_assign", self.stages.len(), other.stages.len()));
        }
        for (a, b) in self.stages.iter_mut().zip(&other.stages) {
            match (a, b) {
                (StageGrads::Affine(a), StageGrads::Affine(b)) => a.add_assign(b)?,
                (StageGrads::Lstm(a), StageGrads::Lstm(b)) => a.add_assign(b)?,
                _ => return Err(Error::InvalidArgument("stage kinds differ".into())),
            }
        }
        Ok(())
    }
}

/// Forward pass over a batch of labelled sequences.
pub fn network_forward(net: &Network, batch: &[Sequence]) -> Result<ForwardPass> {
    let frames: usize = batch.iter().map(|s| s.frames.len()).sum();
    if frames == 0 {
        return Err(Error::InvalidArgument("batch contains no frames".into()));
    }
    let mut loss_sum = 0.0;
    let mut predictions = Vec::with_capacity(batch.len());
    let mut sequences = Vec::with_capacity(batch.len());
    for seq in batch {
        if seq.frames.len() != seq.labels.len() {
            return Err(Error::shape("network_forward labels", seq.frames.len(), seq.labels.len()));
        }
        if let Some(x) = seq.frames.iter().find(|x| x.dim() != net.input_dim()) {
            return Err(Error::shape("network_forward input", net.input_dim(), x.dim()));
        }
        let mut acts: Vec<Vector> = seq.frames.clone();
        let mut stage_caches = Vec::with_capacity(net.stages.len());
        for stage in &net.stages {
            match stage {
                Stage::Affine(layer) => {
                    let mut outs = Vec::with_capacity(acts.len());
                    let mut pres = Vec::with_capacity(acts.len());
                    for x in &acts {
                        let (y, pre) = affine_forward(layer, x)?;
                        outs.push(y);
                        pres.push(pre);
                    }
                    stage_caches.push(StageCache::Affine {
                        inputs: std::mem::replace(&mut acts, outs),
                        pre: pres,
                    });
                }
                Stage::Lstm(cell) => {
                    let steps = lstm_forward(cell, &acts)?;
                    acts = steps.iter().map(|s| s.h.clone()).collect();
                    stage_caches.push(StageCache::Lstm(steps));
                }
            }
        }
        let mut dlogits = Vec::with_capacity(acts.len());
        let mut preds = Vec::with_capacity(acts.len());
        for (logits, &label) in acts.iter().zip(&seq.labels) {
            let (l, g) = softmax_xent(logits, label)?;
            loss_sum += l;
            dlogits.push(g);
            preds.push(logits.argmax().expect("logits are non-empty"));
        }
        predictions.push(preds);
        sequences.push(SequenceCache {
            stages: stage_caches,
            dlogits,
        });
    }
    Ok(ForwardPass {
        loss: loss_sum / frames as f64,
        loss_sum,
        frames,
        predictions,
        cache: NetworkCache { sequences, frames },
    })
}

/// Gradient of the frame-averaged batch loss from [`network_forward`].
pub fn network_backward(net: &Network, cache: &NetworkCache) -> Result<NetworkGrads> {
    let mut grads = net.zero_grads();
    let inv = 1.0 / cache.frames as f64;
    for seq in &cache.sequences {
        let mut upstream: Vec<Vector> = seq.dlogits.iter().map(|g| g.map(|v| v * inv)).collect();
        for ((stage, sc), sg) in net
            .stages
            .iter()
            .zip(&seq.stages)
            .zip(grads.stages.iter_mut())
            .rev()
        {
            upstream = match (stage, sc, sg) {
                (Stage::Affine(layer), StageCache::Affine { inputs, pre }, StageGrads::Affine(g)) => {
                    let mut down = Vec::with_capacity(inputs.len());
                    for ((x, p), d) in inputs.iter().zip(pre).zip(&upstream) {
                        down.push(affine_backward_into(layer, x, p, d, g)?);
                    }
                    down
                }
                (Stage::Lstm(cell), StageCache::Lstm(steps), StageGrads::Lstm(g)) => {
                    lstm_backward_into(cell, steps, &upstream, g)?
                }
                _ => return Err(Error::InvalidArgument("cache does not match network".into())),
            };
        }
    }
    Ok(grads)
}

fn visit_stages<'a, T>(
    items: impl Iterator<Item = &'a T>,
    f: &mut dyn FnMut(&str, ParamKind, &[f64]),
) where
    T: Parameters + 'a,
{
    for (i, item) in items.enumerate() {
        let prefix = format!("stage{i}");
        item.visit(&mut |name, kind, values| f(&prefixed(&prefix, name), kind, values));
    }
}

impl Parameters for Stage {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        match self {
            Stage::Affine(l) => l.visit(f),
            Stage::Lstm(c) => c.visit(f),
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        match self {
            Stage::Affine(l) => l.visit_mut(f),
            Stage::Lstm(c) => c.visit_mut(f),
        }
    }
}

impl Parameters for StageGrads {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        match self {
            StageGrads::Affine(g) => g.visit(f),
            StageGrads::Lstm(g) => g.visit(f),
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        match self {
            StageGrads::Affine(g) => g.visit_mut(f),
            StageGrads::Lstm(g) => g.visit_mut(f),
        }
    }
}

impl Parameters for Network {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        visit_stages(self.stages.iter(), f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        for (i, stage) in self.stages.iter_mut().enumerate() {
            let prefix = format!("stage{i}");
            stage.visit_mut(&mut |name, kind, values| f(&prefixed(&prefix, name), kind, values));
        }
    }
}

impl Parameters for NetworkGrads {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        visit_stages(self.stages.iter(), f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        for (i, stage) in self.stages.iter_mut().enumerate() {
            let prefix = format!("stage{i}");
            stage.visit_mut(&mut |name, kind, values| f(&prefixed(&prefix, name), kind, values));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::activation::Activation;
    use crate::layers::params::{blocks, StabilizerMode};
    use crate::tensor::{Matrix, Rng};

    fn frame(values: &[f64], label: usize) -> Sequence {
        Sequence {
            frames: vec![Vector::from_vec(values.to_vec()).unwrap()],
            labels: vec![label],
        }
    }

    #[test]
    fn single_linear_stage_equals_affine_forward() {
        let mut rng = Rng::new(4);
        let layer =
            AffineLayer::init(3, 4, StabilizerMode::Independent, Activation::Linear, 0.5, &mut rng)
                .unwrap()
                .with_beta(0.3)
                .unwrap();
        let net = Network::new(vec![Stage::Affine(layer.clone())]).unwrap();
        let batch = [frame(&[0.1, -0.2, 0.7], 2)];
        let pass = network_forward(&net, &batch).unwrap();
        let (y, _) = affine_forward(&layer, &batch[0].frames[0]).unwrap();
        let (loss, _) = softmax_xent(&y, 2).unwrap();
        assert_eq!(pass.loss, loss);
        assert_eq!(pass.predictions[0][0], y.argmax().unwrap());
    }

    #[test]
    fn zero_output_layer_gives_uniform_loss() {
        let mut rng = Rng::new(1);
        let hidden =
            AffineLayer::init(2, 5, StabilizerMode::None, Activation::Sigmoid, 0.1, &mut rng).unwrap();
        let out = AffineLayer::new(
            Matrix::zeros(3, 5),
            Vector::zeros(3),
            StabilizerMode::Independent,
            Activation::Linear,
        )
        .unwrap();
        let net = Network::new(vec![Stage::Affine(hidden), Stage::Affine(out)]).unwrap();
        let batch = [frame(&[1.0, 2.0], 0), frame(&[-1.0, 0.5], 2)];
        let pass = network_forward(&net, &batch).unwrap();
        assert!((pass.loss - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_incompatible_stages_and_inputs() {
        let a = AffineLayer::new(Matrix::zeros(3, 2), Vector::zeros(3), StabilizerMode::None, Activation::Relu).unwrap();
        let b = AffineLayer::new(Matrix::zeros(2, 4), Vector::zeros(2), StabilizerMode::None, Activation::Linear).unwrap();
        assert!(Network::new(vec![Stage::Affine(a.clone()), Stage::Affine(b)]).is_err());
        assert!(Network::new(vec![]).is_err());
        let net = Network::new(vec![Stage::Affine(a)]).unwrap();
        assert!(network_forward(&net, &[frame(&[1.0], 0)]).is_err());
        assert!(network_forward(&net, &[frame(&[1.0, 1.0], 3)]).is_err());
        assert!(network_forward(&net, &[]).is_err());
    }

    #[test]
    fn parameter_names_are_prefixed_by_stage() {
        let mut rng = Rng::new(2);
        let cell = LstmCell::init(2, 3, StabilizerMode::GateShared, 0.1, &mut rng).unwrap();
        let out = AffineLayer::init(3, 2, StabilizerMode::LayerShared, Activation::Linear, 0.1, &mut rng).unwrap();
        let net = Network::new(vec![Stage::Lstm(cell), Stage::Affine(out)]).unwrap();
        let names: Vec<String> = blocks(&net).into_iter().map(|b| b.name).collect();
        assert!(names.contains(&"stage0.W_co".to_string()));
        assert!(names.contains(&"stage0.beta_f".to_string()));
        assert!(names.contains(&"stage1.beta".to_string()));
        assert_eq!(blocks(&net), blocks(&net.zero_grads()));
    }
}
