use alloc::vec;
use alloc::vec::Vec;

use super::{Activation, ForwardTrace, Network, NnError, TrainConfig};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Clamp applied to average activations inside the KL penalty.
pub const P_HAT_CLAMP: f64 = 1e-10;

/// Per-layer partial derivatives, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub dw: Vec<Matrix>,
    pub db: Vec<Vec<f64>>,
    /// Error terms of the last example accumulated, one per layer.
    pub delta: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            dw: net.layers.iter().map(|l| Matrix::zeros(l.outputs(), l.inputs())).collect(),
            db: net.layers.iter().map(|l| vec![0.0; l.outputs()]).collect(),
            delta: net.layers.iter().map(|l| vec![0.0; l.outputs()]).collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for (w, b) in self.dw.iter_mut().zip(&mut self.db) {
            w.as_mut_slice().iter_mut().for_each(|v| *v *= s);
            b.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Largest absolute partial, useful in tests.
    pub fn max_abs(&self) -> f64 {
        self.dw
            .iter()
            .flat_map(|w| w.as_slice().iter())
            .chain(self.db.iter().flatten())
            .fold(0.0, |m, v| m.max(math::abs(*v)))
    }
}

/// Sparsity inputs for the hidden-layer error terms.
#[derive(Debug, Clone, Copy)]
pub struct SparsityTerm<'a> {
    /// Average activation of each hidden layer, frozen for the pass.
    pub p_hat: &'a [Vec<f64>],
    pub p: f64,
    pub beta: f64,
}

fn example_loss(output_act: Activation, a: &[f64], y: &[f64]) -> f64 {
    match output_act {
        Activation::Softmax => -a.iter().zip(y).map(|(&ai, &yi)| yi * math::ln(ai.max(1e-300))).sum::<f64>(),
        _ => 0.5 * a.iter().zip(y).map(|(&ai, &yi)| (ai - yi) * (ai - yi)).sum::<f64>(),
    }
}

/// `(1/m) Σ loss(h(x), y) + (λ/2) Σ W²`; loss is ½‖h−y‖², or cross-entropy
/// for a softmax output. Biases are not decayed.
pub fn cost(net: &Network, inputs: &Matrix, targets: &Matrix, weight_decay: f64) -> Result<f64, NnError> {
    let out_act = net.layers.last().map_or(Activation::Linear, |l| l.activation);
    let mut total = 0.0;
    for (x, y) in inputs.iter_rows().zip(targets.iter_rows()) {
        let h = net.predict(x)?;
        total += example_loss(out_act, &h, y);
    }
    Ok(total / inputs.rows() as f64 + 0.5 * weight_decay * net.weight_sq_sum())
}

/// Mean activation of every hidden layer over `inputs`, without dropout.
pub fn average_activation(net: &Network, inputs: &Matrix) -> Result<Vec<Vec<f64>>, NnError> {
    let hidden = net.n_hidden();
    let mut sums: Vec<Vec<f64>> = net.layers[..hidden].iter().map(|l| vec![0.0; l.outputs()]).collect();
    for x in inputs.iter_rows() {
        let trace = net.forward(x)?;
        for (s, a) in sums.iter_mut().zip(&trace.a[1..=hidden]) {
            s.iter_mut().zip(a).for_each(|(s, v)| *s += v);
        }
    }
    let m = inputs.rows() as f64;
    sums.iter_mut().flatten().for_each(|s| *s /= m);
    Ok(sums)
}

/// KL divergence between Bernoulli(p) and Bernoulli(p̂).
pub fn kl_bernoulli(p: f64, p_hat: f64) -> Result<f64, NnError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(NnError::Domain(p));
    }
    let q = p_hat.clamp(P_HAT_CLAMP, 1.0 - P_HAT_CLAMP);
    Ok(p * math::ln(p / q) + (1.0 - p) * math::ln((1.0 - p) / (1.0 - q)))
}

pub fn sparsity_penalty(p_hat: &[Vec<f64>], p: f64, beta: f64) -> Result<f64, NnError> {
    let mut s = 0.0;
    for &q in p_hat.iter().flatten() {
        s += kl_bernoulli(p, q)?;
    }
    Ok(beta * s)
}

/// Cost plus `β Σ_j KL(p ‖ p̂_j)` over every hidden unit, with p̂ averaged
/// over `inputs`.
pub fn sparse_cost(net: &Network, inputs: &Matrix, targets: &Matrix, cfg: &TrainConfig) -> Result<f64, NnError> {
    let j = cost(net, inputs, targets, cfg.weight_decay)?;
    if cfg.sparsity_beta == 0.0 {
        return Ok(j);
    }
    let p_hat = average_activation(net, inputs)?;
    Ok(j + sparsity_penalty(&p_hat, cfg.sparsity_p, cfg.sparsity_beta)?)
}

fn check_trace(net: &Network, trace: &ForwardTrace, y: &[f64]) -> Result<(), NnError> {
    let n = net.layers.len();
    let ok = trace.z.len() == n
        && trace.a.len() == n + 1
        && (trace.dropout_masks.is_empty() || trace.dropout_masks.len() == n)
        && net
            .layers
            .iter()
            .enumerate()
            .all(|(l, layer)| trace.a[l].len() == layer.inputs() && trace.z[l].len() == layer.outputs())
        && y.len() == net.output_dim();
    if ok {
        Ok(())
    } else {
        Err(NnError::TraceMismatch)
    }
}

/// Adds one example's partials into `grads`.
pub fn accumulate_example(
    net: &Network,
    trace: &ForwardTrace,
    y: &[f64],
    sparsity: Option<SparsityTerm<'_>>,
    grads: &mut Gradients,
) -> Result<(), NnError> {
    check_trace(net, trace, y)?;
    let n = net.layers.len();
    if let Some(s) = sparsity {
        let ok =
            s.p_hat.len() == net.n_hidden() && s.p_hat.iter().zip(&net.layers).all(|(p, l)| p.len() == l.outputs());
        if !ok {
            return Err(NnError::StaleAverages);
        }
    }
    let last = &net.layers[n - 1];
    let a_out = &trace.a[n];
    let mut delta: Vec<f64> = match last.activation {
        Activation::Softmax => a_out.iter().zip(y).map(|(a, t)| a - t).collect(),
        act => a_out.iter().zip(y).zip(&trace.z[n - 1]).map(|((a, t), &z)| -(t - a) * act.derivative(z)).collect(),
    };
    for l in (0..n).rev() {
        let input = &trace.a[l];
        {
            let dw = &mut grads.dw[l];
            for (i, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (g, &a) in dw.row_mut(i).iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            grads.db[l].iter_mut().zip(&delta).for_each(|(g, d)| *g += d);
        }
        if l == 0 {
            grads.delta[0].clone_from(&delta);
            break;
        }
        let mut back = net.layers[l].weights.t_matvec(&delta);
        if let Some(mask) = trace.dropout_masks.get(l) {
            back.iter_mut().zip(mask).for_each(|(b, m)| *b *= m);
        }
        if let Some(s) = sparsity {
            for (b, &q) in back.iter_mut().zip(&s.p_hat[l - 1]) {
                let q = q.clamp(P_HAT_CLAMP, 1.0 - P_HAT_CLAMP);
                *b += s.beta * (-s.p / q + (1.0 - s.p) / (1.0 - q));
            }
        }
        let act = net.layers[l - 1].activation;
        for (b, &z) in back.iter_mut().zip(&trace.z[l - 1]) {
            *b *= act.derivative(z);
        }
        grads.delta[l] = core::mem::replace(&mut delta, back);
    }
    Ok(())
}

/// Partials of one example's loss (no weight decay).
pub fn backprop(net: &Network, trace: &ForwardTrace, y: &[f64]) -> Result<Gradients, NnError> {
    let mut g = Gradients::zeros_like(net);
    accumulate_example(net, trace, y, None, &mut g)?;
    Ok(g)
}

/// [`backprop`] with the KL term folded into every hidden error term.
pub fn sparse_backprop(
    net: &Network,
    trace: &ForwardTrace,
    y: &[f64],
    p_hat: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<Gradients, NnError> {
    let mut g = Gradients::zeros_like(net);
    let term = SparsityTerm { p_hat, p: cfg.sparsity_p, beta: cfg.sparsity_beta };
    accumulate_example(net, trace, y, (cfg.sparsity_beta > 0.0).then_some(term), &mut g)?;
    Ok(g)
}

/// Gradient of the batch cost: `(1/m) Σ ∇J(x, y) + λW` for weights and
/// `(1/m) Σ ∇J(x, y)` for biases.
///
/// With `rng` set, each example gets a dropout forward pass. With `p_hat`
/// set and `sparsity_beta > 0`, the KL term is included.
pub fn batch_gradient(
    net: &Network,
    inputs: &Matrix,
    targets: &Matrix,
    rows: &[usize],
    cfg: &TrainConfig,
    p_hat: Option<&[Vec<f64>]>,
    mut rng: Option<&mut Rng>,
) -> Result<Gradients, NnError> {
    let mut g = Gradients::zeros_like(net);
    let sparsity = match p_hat {
        Some(p_hat) if cfg.sparsity_beta > 0.0 => {
            Some(SparsityTerm { p_hat, p: cfg.sparsity_p, beta: cfg.sparsity_beta })
        }
        _ => None,
    };
    for &r in rows {
        let x = inputs.row(r);
        let trace = match rng.as_deref_mut() {
            Some(rng) => net.forward_train(x, cfg, rng)?,
            None => net.forward(x)?,
        };
        accumulate_example(net, &trace, targets.row(r), sparsity, &mut g)?;
    }
    g.scale(1.0 / rows.len() as f64);
    if cfg.weight_decay > 0.0 {
        for (dw, layer) in g.dw.iter_mut().zip(&net.layers) {
            for (d, w) in dw.as_mut_slice().iter_mut().zip(layer.weights.as_slice()) {
                *d += cfg.weight_decay * w;
            }
        }
    }
    Ok(g)
}
