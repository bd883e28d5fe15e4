use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;

use super::{Activation, NnError, TrainConfig};
use crate::math;
use crate::matrix::{dot, Matrix};
use crate::rng::Rng;

/// One fully connected layer: `a_out = f(W a_in + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `out x in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl LayerParams {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self, NnError> {
        if weights.rows() != bias.len() {
            return Err(NnError::ShapeMismatch { expected: weights.rows(), found: bias.len() });
        }
        Ok(LayerParams { weights, bias, activation })
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot(inputs: usize, outputs: usize, activation: Activation, rng: &mut Rng) -> Self {
        let limit = math::sqrt(6.0 / (inputs + outputs) as f64);
        let data = (0..inputs * outputs).map(|_| rng.gen_range(-limit..=limit)).collect();
        LayerParams { weights: Matrix::from_vec(outputs, inputs, data), bias: vec![0.0; outputs], activation }
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        self.weights.iter_rows().zip(&self.bias).map(|(w, b)| dot(w, input) + b).collect()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let z = self.pre_activation(input);
        let mut a = vec![0.0; z.len()];
        self.activation.apply(&z, &mut a);
        a
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<LayerParams>,
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `z[l]`: pre-activation of layer `l`.
    pub z: Vec<Vec<f64>>,
    /// `a[0]` is the (dropped-out) input, `a[l + 1]` the output of layer `l`.
    pub a: Vec<Vec<f64>>,
    /// Per-unit dropout scale (`0` or `1/(1-rate)`) for each `a[l]` that
    /// feeds another layer; empty at inference.
    pub dropout_masks: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.a.last().map_or(&[], Vec::as_slice)
    }
}

impl Network {
    pub fn new(layers: Vec<LayerParams>) -> Result<Self, NnError> {
        for w in layers.windows(2) {
            if w[0].outputs() != w[1].inputs() {
                return Err(NnError::ShapeMismatch { expected: w[0].outputs(), found: w[1].inputs() });
            }
        }
        Ok(Network { layers })
    }

    /// Glorot-initialized network with `sizes = [input, h1, ..., output]`.
    pub fn random(sizes: &[usize], activations: &[Activation], rng: &mut Rng) -> Self {
        assert_eq!(sizes.len(), activations.len() + 1, "one activation per layer");
        let layers =
            sizes.windows(2).zip(activations).map(|(s, &act)| LayerParams::glorot(s[0], s[1], act, rng)).collect();
        Network { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, LayerParams::inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, LayerParams::outputs)
    }

    pub fn n_hidden(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    pub fn weight_sq_sum(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.frobenius_sq()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(LayerParams::is_finite)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::ShapeMismatch { expected: self.input_dim(), found: x.len() });
        }
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.forward(&a);
        }
        Ok(a)
    }

    /// Inference pass: no masking, no scaling.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace, NnError> {
        self.forward_impl(x, None)
    }

    /// Training pass with inverted dropout on the input and hidden layers.
    /// Without any configured dropout this matches [`Network::forward`].
    pub fn forward_train(&self, x: &[f64], cfg: &TrainConfig, rng: &mut Rng) -> Result<ForwardTrace, NnError> {
        let any = cfg.input_dropout > 0.0 || (0..self.n_hidden()).any(|h| cfg.hidden_dropout_at(h) > 0.0);
        self.forward_impl(x, any.then_some((cfg, rng)))
    }

    fn forward_impl(&self, x: &[f64], mut dropout: Option<(&TrainConfig, &mut Rng)>) -> Result<ForwardTrace, NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::ShapeMismatch { expected: self.input_dim(), found: x.len() });
        }
        let n = self.layers.len();
        let mut trace =
            ForwardTrace { z: Vec::with_capacity(n), a: Vec::with_capacity(n + 1), dropout_masks: Vec::new() };
        let mut input = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            if let Some((cfg, rng)) = dropout.as_mut() {
                let rate = if l == 0 { cfg.input_dropout } else { cfg.hidden_dropout_at(l - 1) };
                let mask = draw_mask(input.len(), rate, rng);
                input.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                trace.dropout_masks.push(mask);
            }
            let z = layer.pre_activation(&input);
            let mut a = vec![0.0; z.len()];
            layer.activation.apply(&z, &mut a);
            trace.a.push(input);
            trace.z.push(z);
            input = a;
        }
        trace.a.push(input);
        Ok(trace)
    }
}

fn draw_mask(len: usize, rate: f64, rng: &mut Rng) -> Vec<f64> {
    if rate <= 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect()
}
