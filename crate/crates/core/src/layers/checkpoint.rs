//! Model checkpoints.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! {
//!   "format": "betastab-checkpoint",
//!   "version": 1,
//!   "network": {
//!     "stages": [
//!       { "kind": "affine", "mode": "independent", "activation": "sigmoid",
//!         "beta": 0.0, "weight": {"rows": R, "cols": C, "values": [...]},
//!         "bias": [...] },
//!       { "kind": "lstm", "mode": "gate-shared", "input_dim": I, "hidden_dim": H,
//!         "betas": [...], "W_xi": {...}, ..., "W_co": {...},
//!         "b_i": [...], "b_f": [...], "b_c": [...], "b_o": [...] }
//!     ]
//!   }
//! }
//! ```
//!
//! Matrices are row-major. `betas` of an LSTM stage holds the stored slots:
//! none for `none`, one for `layer-shared`, four (input, forget, cell, output
//! gate) for `gate-shared` and eleven in `W_xi … W_co` order for
//! `independent`. Floats are written in shortest round-trip form and parsed
//! exactly, so save followed by load reproduces every bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::Network;

pub const FORMAT: &str = "betastab-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Serialize)]
struct CheckpointOut<'a> {
    format: &'static str,
    version: u32,
    network: &'a Network,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointIn {
    format: String,
    version: u32,
    network: Network,
}

pub fn to_string(net: &Network) -> Result<String> {
    serde_json::to_string_pretty(&CheckpointOut {
        format: FORMAT,
        version: VERSION,
        network: net,
    })
    .map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn from_str(text: &str) -> Result<Network> {
    let ck: CheckpointIn =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if ck.format != FORMAT {
        return Err(Error::Checkpoint(format!("unexpected format `{}`", ck.format)));
    }
    if ck.version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
    }
    Ok(ck.network)
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(net)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}
