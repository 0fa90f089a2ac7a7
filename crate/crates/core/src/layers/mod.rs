//! Forward and backward passes for stabilized affine layers, the stabilized
//! LSTM cell, softmax cross-entropy, and stacks of those.

mod activation;
mod affine;
pub mod checkpoint;
mod loss;
pub mod lstm;
mod network;
mod params;

pub use activation::{activation_apply, activation_deriv, sigmoid, Activation};
pub use affine::{affine_backward, affine_backward_into, affine_forward, AffineGrads, AffineLayer};
pub use loss::{softmax, softmax_xent};
pub use lstm::{
    lstm_backward, lstm_backward_into, lstm_forward, lstm_step, Gate, LstmCell, LstmGrads,
    LstmStepCache, Transform,
};
pub use network::{
    network_backward, network_forward, ForwardPass, Network, NetworkCache, NetworkGrads, Stage,
    StageGrads,
};
pub use params::{blocks, flatten, unflatten, BlockInfo, ParamKind, Parameters, StabilizerMode};
