use serde::{Deserialize, Serialize};

use crate::data::{Sequence, SequenceDataset};
use crate::error::{Error, Result};
use crate::tensor::{Rng, Vector};

/// Delayed recall: each frame shows a one-hot symbol from an alphabet of
/// `alphabet` symbols, and frame `t` must be labelled with the symbol shown at
/// `t - delay`. The first `delay` frames carry the blank class, which has index
/// `alphabet`, so the dataset has `alphabet + 1` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayedRecallSpec {
    pub seq_len: usize,
    pub delay: usize,
    pub alphabet: usize,
    pub n: usize,
    pub seed: u64,
}

impl DelayedRecallSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("delayed recall: {msg}")));
        if self.seq_len == 0 {
            return bad("seq_len must be positive");
        }
        if self.delay >= self.seq_len {
            return bad("delay must be smaller than seq_len");
        }
        if self.alphabet < 2 {
            return bad("alphabet needs at least two symbols");
        }
        if self.n == 0 {
            return bad("n must be positive");
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.alphabet + 1
    }

    pub fn blank(&self) -> usize {
        self.alphabet
    }
}

pub fn gen_delayed_recall(spec: &DelayedRecallSpec) -> Result<SequenceDataset> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let sequences = (0..spec.n)
        .map(|_| {
            let symbols: Vec<usize> = (0..spec.seq_len).map(|_| rng.below(spec.alphabet)).collect();
            let frames = symbols
                .iter()
                .map(|&s| {
                    let mut onehot = vec![0.0; spec.alphabet];
                    onehot[s] = 1.0;
                    Vector::from_raw(onehot)
                })
                .collect();
            let labels = (0..spec.seq_len)
                .map(|t| if t < spec.delay { spec.blank() } else { symbols[t - spec.delay] })
                .collect();
            Sequence { frames, labels }
        })
        .collect();
    Ok(SequenceDataset {
        sequences,
        feature_dim: spec.alphabet,
        num_classes: spec.num_classes(),
    })
}

/// Best expected frame accuracy of any classifier that sees only the current
/// frame. With `delay > 0` the current symbol is independent of the label, so
/// the best such rule always predicts the most frequent label.
pub fn delayed_recall_chance(spec: &DelayedRecallSpec) -> f64 {
    if spec.delay == 0 {
        return 1.0;
    }
    let blank = spec.delay as f64 / spec.seq_len as f64;
    let symbol = (1.0 - blank) / spec.alphabet as f64;
    blank.max(symbol)
}
