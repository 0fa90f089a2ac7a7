//! Neural-network training with learnable per-transform scale parameters.
//!
//! Every linear transform `Wx` may be replaced by `e^β · Wx` with a scalar
//! `β` that is trained by SGD alongside `W`. Affine layers and a peephole
//! LSTM cell support this, with the LSTM betas placed per transform, per gate
//! or per cell. Around the layers sit momentum SGD, learning-rate halving,
//! a finite-difference gradient checker, synthetic datasets and an
//! experiment harness for learning-rate sensitivity sweeps.

pub mod data;
mod error;
pub mod gradcheck;
pub mod harness;
pub mod layers;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
