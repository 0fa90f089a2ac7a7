//! Deterministic synthetic datasets: Gaussian frame classification and
//! delayed-recall sequence labelling, plus train/CV splitting and file I/O.

mod gaussian;
pub mod io;
mod recall;
mod split;

use serde::{Deserialize, Serialize};

use crate::tensor::Vector;

pub use gaussian::{gen_gaussian_frames, nearest_mean_accuracy, GaussianFramesSpec};
pub use recall::{delayed_recall_chance, gen_delayed_recall, DelayedRecallSpec};
pub use split::{split, SplitSpec};

/// Frames with one label each. A frame-classification example is a sequence
/// of length one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub frames: Vec<Vector>,
    pub labels: Vec<usize>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub features: Vector,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDataset {
    pub frames: Vec<Frame>,
    pub feature_dim: usize,
    pub num_classes: usize,
    /// Class centres the frames were drawn around (empty for imported data).
    pub means: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub sequences: Vec<Sequence>,
    pub feature_dim: usize,
    pub num_classes: usize,
}

impl FrameDataset {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for f in &self.frames {
            counts[f.label] += 1;
        }
        counts
    }

    /// Each frame as a length-one sequence.
    pub fn to_sequences(&self) -> Vec<Sequence> {
        self.frames
            .iter()
            .map(|f| Sequence {
                frames: vec![f.features.clone()],
                labels: vec![f.label],
            })
            .collect()
    }
}

impl SequenceDataset {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}
