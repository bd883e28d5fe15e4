use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Linear,
    /// Output layer only; paired with cross-entropy loss.
    Softmax,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
            Activation::Linear => 3,
            Activation::Softmax => 4,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Activation> {
        Some(match c {
            0 => Activation::Relu,
            1 => Activation::Sigmoid,
            2 => Activation::Tanh,
            3 => Activation::Linear,
            4 => Activation::Softmax,
            _ => return None,
        })
    }

    /// Applies the activation to a whole layer.
    pub fn apply(self, z: &[f64], out: &mut [f64]) {
        match self {
            Activation::Softmax => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = math::exp(v - max);
                    sum += *o;
                }
                out.iter_mut().for_each(|o| *o /= sum);
            }
            f => {
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = f.scalar(v);
                }
            }
        }
    }

    /// Elementwise value; softmax has no elementwise form and returns `z`.
    #[inline]
    pub fn scalar(self, z: f64) -> f64 {
        match self {
            Activation::Relu => relu(z),
            Activation::Sigmoid => math::sigmoid(z),
            Activation::Tanh => math::tanh(z),
            Activation::Linear | Activation::Softmax => z,
        }
    }

    /// `f'(z)`. The ReLU subgradient at 0 is 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = math::sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = math::tanh(z);
                1.0 - t * t
            }
            Activation::Linear | Activation::Softmax => 1.0,
        }
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}
