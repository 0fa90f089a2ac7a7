use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which stabilizer scalars a layer carries.
///
/// Affine layers have a single linear transform, so every mode other than
/// `None` gives them exactly one beta. LSTM cells carry one beta per cell
/// (`LayerShared`), one per gate branch (`GateShared`) or one per linear
/// transform (`Independent`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilizerMode {
    None,
    LayerShared,
    GateShared,
    Independent,
}

impl StabilizerMode {
    pub const ALL: [StabilizerMode; 4] = [
        StabilizerMode::None,
        StabilizerMode::LayerShared,
        StabilizerMode::GateShared,
        StabilizerMode::Independent,
    ];

    pub fn is_stabilized(self) -> bool {
        self != StabilizerMode::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StabilizerMode::None => "none",
            StabilizerMode::LayerShared => "layer-shared",
            StabilizerMode::GateShared => "gate-shared",
            StabilizerMode::Independent => "independent",
        }
    }
}

impl std::str::FromStr for StabilizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StabilizerMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stabilizer mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    Beta,
}

/// Uniform access to the trainable scalars of a model or of its gradient.
///
/// Implementors must visit blocks in a fixed order, and a gradient type must
/// visit its blocks in the same order and with the same lengths as the model
/// it mirrors. The optimizer and the finite-difference oracle rely on this.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64]));
}

/// Name, kind and length of every parameter block, in visiting order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub name: String,
    pub kind: ParamKind,
    pub len: usize,
}

pub fn blocks(p: &impl Parameters) -> Vec<BlockInfo> {
    let mut out = Vec::new();
    p.visit(&mut |name, kind, values| {
        out.push(BlockInfo {
            name: name.to_string(),
            kind,
            len: values.len(),
        })
    });
    out
}

pub fn flatten(p: &impl Parameters) -> Vec<f64> {
    let mut out = Vec::new();
    p.visit(&mut |_, _, values| out.extend_from_slice(values));
    out
}

/// Writes `flat` back into `p`; `flat` must have been produced by [`flatten`]
/// on a model of identical structure.
pub fn unflatten(p: &mut impl Parameters, flat: &[f64]) -> Result<()> {
    let mut offset = 0;
    let mut overflow = false;
    p.visit_mut(&mut |_, _, values| {
        let end = offset + values.len();
        if end <= flat.len() {
            values.copy_from_slice(&flat[offset..end]);
        } else {
            overflow = true;
        }
        offset = end;
    });
    if overflow || offset != flat.len() {
        return Err(Error::shape("unflatten", offset, flat.len()));
    }
    Ok(())
}

/// Prefixes block names, used when a container visits its children.
pub(crate) fn prefixed(prefix: &str, name: &str) -> String {
    format!("{prefix}.{name}")
}
