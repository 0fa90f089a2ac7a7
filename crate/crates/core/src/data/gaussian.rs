use serde::{Deserialize, Serialize};

use crate::data::{Frame, FrameDataset};
use crate::error::{Error, Result};
use crate::tensor::{Rng, Vector};

/// Isotropic Gaussian clusters, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFramesSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub n: usize,
    /// Minimum pairwise distance between class means.
    pub class_separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

const MEAN_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1;
const PLACEMENT_TRIES: usize = 1000;

impl GaussianFramesSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("gaussian frames: {msg}")));
        if self.num_classes < 2 {
            return bad("need at least two classes");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive");
        }
        if self.n < self.num_classes {
            return bad("n must be at least num_classes");
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return bad("class_separation must be positive");
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be positive");
        }
        Ok(())
    }
}

/// Class means drawn uniformly from a cube and rejected until every pair is at
/// least `class_separation` apart. The cube starts with half-width equal to the
/// separation and grows by half whenever a placement run gets stuck.
fn place_means(spec: &GaussianFramesSpec, rng: &mut Rng) -> Vec<Vector> {
    let sep = spec.class_separation;
    let mut half_width = sep;
    loop {
        let mut means: Vec<Vec<f64>> = Vec::with_capacity(spec.num_classes);
        let mut tries = 0;
        while means.len() < spec.num_classes && tries < PLACEMENT_TRIES {
            tries += 1;
            let candidate: Vec<f64> = (0..spec.feature_dim)
                .map(|_| rng.uniform(-half_width, half_width))
                .collect();
            let far_enough = means.iter().all(|m| {
                let d2: f64 = m.iter().zip(&candidate).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() >= sep
            });
            if far_enough {
                means.push(candidate);
            }
        }
        if means.len() == spec.num_classes {
            return means.into_iter().map(Vector::from_raw).collect();
        }
        half_width *= 1.5;
    }
}

pub fn gen_gaussian_frames(spec: &GaussianFramesSpec) -> Result<FrameDataset> {
    spec.validate()?;
    let means = place_means(spec, &mut Rng::stream(spec.seed, MEAN_STREAM));
    let mut rng = Rng::stream(spec.seed, SAMPLE_STREAM);
    let mut labels: Vec<usize> = (0..spec.n).map(|i| i % spec.num_classes).collect();
    rng.shuffle(&mut labels);
    let frames = labels
        .into_iter()
        .map(|label| {
            let values = means[label]
                .values()
                .iter()
                .map(|m| m + spec.noise_sigma * rng.standard_normal())
                .collect();
            Frame {
                features: Vector::from_raw(values),
                label,
            }
        })
        .collect();
    Ok(FrameDataset {
        frames,
        feature_dim: spec.feature_dim,
        num_classes: spec.num_classes,
        means,
    })
}

/// Accuracy of assigning every frame to its closest class mean. For equal
/// isotropic clusters and equal priors this is the Bayes-optimal rule.
pub fn nearest_mean_accuracy(ds: &FrameDataset) -> f64 {
    if ds.frames.is_empty() || ds.means.is_empty() {
        return 0.0;
    }
    let correct = ds
        .frames
        .iter()
        .filter(|f| {
            let best = ds
                .means
                .iter()
                .enumerate()
                .map(|(c, m)| {
                    let d2: f64 = m
                        .values()
                        .iter()
                        .zip(f.features.values())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (c, d2)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(c, _)| c);
            best == Some(f.label)
        })
        .count();
    correct as f64 / ds.frames.len() as f64
}
