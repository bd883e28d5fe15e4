//! Feedforward networks trained by backpropagation.

mod activation;
pub mod backprop;
pub mod checkpoint;
mod config;
mod network;
pub mod optim;

use thiserror::Error;

pub use activation::{relu, Activation};
pub use backprop::{
    average_activation, backprop, batch_gradient, cost, kl_bernoulli, sparse_backprop, sparse_cost, Gradients,
};
pub use checkpoint::{decode_network, encode_network};
pub use config::{StoppingMetric, TrainConfig};
pub use network::{ForwardTrace, LayerParams, Network};
pub use optim::{batch_gd_step, early_stop, enforce_max_w2, train_epoch, OptimizerState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("forward trace does not match the network")]
    TraceMismatch,
    #[error("average activations do not match the hidden layers")]
    StaleAverages,
    #[error("value {0} outside the open unit interval")]
    Domain(f64),
    #[error("invalid training config: {0}")]
    InvalidConfig(alloc::string::String),
    #[error("parameters became non-finite")]
    NonFinite,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(&'static str),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
}
