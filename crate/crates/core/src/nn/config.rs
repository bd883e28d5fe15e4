use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Activation, Network, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppingMetric {
    Logloss,
    Mse,
    /// Maximized; compared as `1 - auc`.
    Auc,
}

/// Training knobs shared by autoencoder pretraining and fine-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub momentum_start: f64,
    pub momentum_stable: f64,
    /// Training samples over which momentum moves from start to stable.
    pub momentum_ramp: f64,
    pub sparsity_p: f64,
    pub sparsity_beta: f64,
    /// `α_t = α / (1 + rate_annealing · t)`, t in training samples.
    pub rate_annealing: f64,
    /// Per-depth learning-rate multiplier: layer `l` uses `α · rate_decay^l`.
    pub rate_decay: f64,
    /// ADADELTA instead of momentum SGD.
    pub adaptive: bool,
    pub rho: f64,
    pub epsilon: f64,
    pub input_dropout: f64,
    /// One rate per hidden layer; missing entries mean no dropout.
    pub hidden_dropout: Vec<f64>,
    pub max_w2: Option<f64>,
    pub epochs: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub stopping_metric: StoppingMetric,
    pub stopping_tolerance: f64,
    /// 0 disables early stopping.
    pub stopping_rounds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::paper_classifier()
    }
}

impl TrainConfig {
    /// Settings of the supervised network in the reference experiment.
    pub fn paper_classifier() -> Self {
        TrainConfig {
            learning_rate: 0.005,
            weight_decay: 0.0,
            momentum_start: 0.5,
            momentum_stable: 0.0,
            momentum_ramp: 1e6,
            sparsity_p: 0.05,
            sparsity_beta: 0.0,
            rate_annealing: 1e-6,
            rate_decay: 1.0,
            adaptive: false,
            rho: 0.99,
            epsilon: 1e-8,
            input_dropout: 0.1,
            hidden_dropout: alloc::vec![0.5; 4],
            max_w2: Some(10.0),
            epochs: 100,
            batch_size: 0,
            stopping_metric: StoppingMetric::Logloss,
            stopping_tolerance: 1e-2,
            stopping_rounds: 5,
            seed: 42,
        }
    }

    /// Autoencoder settings of the reference experiment (ADADELTA, 10 epochs).
    pub fn paper_autoencoder() -> Self {
        TrainConfig {
            adaptive: true,
            epochs: 10,
            input_dropout: 0.0,
            hidden_dropout: Vec::new(),
            ..Self::paper_classifier()
        }
    }

    /// No regularization, dropout, momentum or annealing; plain gradient descent.
    pub fn plain(learning_rate: f64, epochs: usize) -> Self {
        TrainConfig {
            learning_rate,
            momentum_start: 0.0,
            momentum_stable: 0.0,
            momentum_ramp: 0.0,
            rate_annealing: 0.0,
            input_dropout: 0.0,
            hidden_dropout: Vec::new(),
            max_w2: None,
            epochs,
            stopping_rounds: 0,
            ..Self::paper_classifier()
        }
    }

    pub fn hidden_dropout_at(&self, hidden_layer: usize) -> f64 {
        self.hidden_dropout.get(hidden_layer).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: alloc::string::String| Err(NnError::InvalidConfig(m));
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0) || !(self.sparsity_beta >= 0.0) || !(self.rate_annealing >= 0.0) {
            return bad("weight_decay, sparsity_beta and rate_annealing must be >= 0".into());
        }
        for (name, v) in [("momentum_start", self.momentum_start), ("momentum_stable", self.momentum_stable)] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1), got {v}"));
            }
        }
        if !(self.momentum_ramp >= 0.0) {
            return bad("momentum_ramp must be >= 0".into());
        }
        if !(self.rate_decay > 0.0) {
            return bad("rate_decay must be > 0".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) || !(self.epsilon > 0.0) {
            return bad("rho must be in (0, 1) and epsilon > 0".into());
        }
        if !(self.sparsity_p > 0.0 && self.sparsity_p < 1.0) {
            return bad(format!("sparsity_p must be in (0, 1), got {}", self.sparsity_p));
        }
        for &r in core::iter::once(&self.input_dropout).chain(&self.hidden_dropout) {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("dropout rate {r} outside [0, 1)"));
            }
        }
        if let Some(w) = self.max_w2 {
            if !(w > 0.0) {
                return bad("max_w2 must be > 0".into());
            }
        }
        if !(self.stopping_tolerance >= 0.0) {
            return bad("stopping_tolerance must be >= 0".into());
        }
        Ok(())
    }

    /// Checks the config against a network: the KL penalty needs sigmoid
    /// hidden units and softmax may only appear on the output layer.
    pub fn validate_for(&self, net: &Network) -> Result<(), NnError> {
        self.validate()?;
        let n = net.layers.len();
        for (l, layer) in net.layers.iter().enumerate() {
            let hidden = l + 1 < n;
            if hidden && layer.activation == Activation::Softmax {
                return Err(NnError::InvalidConfig(format!("softmax on hidden layer {l}")));
            }
            if hidden && self.sparsity_beta > 0.0 && layer.activation != Activation::Sigmoid {
                return Err(NnError::InvalidConfig(format!(
                    "sparsity penalty needs sigmoid hidden units, layer {l} is {:?}",
                    layer.activation
                )));
            }
        }
        Ok(())
    }
}
