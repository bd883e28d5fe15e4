use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use super::backprop::{average_activation, batch_gradient, Gradients};
use super::{Network, NnError, TrainConfig};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Velocity and ADADELTA accumulators, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub velocity_w: Vec<Matrix>,
    pub velocity_b: Vec<Vec<f64>>,
    pub sq_grad_w: Vec<Matrix>,
    pub sq_grad_b: Vec<Vec<f64>>,
    pub sq_step_w: Vec<Matrix>,
    pub sq_step_b: Vec<Vec<f64>>,
    /// Training examples consumed so far; drives annealing and the momentum ramp.
    pub samples_seen: u64,
}

impl OptimizerState {
    pub fn new(net: &Network) -> Self {
        let w = || net.layers.iter().map(|l| Matrix::zeros(l.outputs(), l.inputs())).collect::<Vec<_>>();
        let b = || net.layers.iter().map(|l| vec![0.0; l.outputs()]).collect::<Vec<_>>();
        OptimizerState {
            velocity_w: w(),
            velocity_b: b(),
            sq_grad_w: w(),
            sq_grad_b: b(),
            sq_step_w: w(),
            sq_step_b: b(),
            samples_seen: 0,
        }
    }
}

/// `α0 / (1 + rate_annealing · t) · rate_decay^layer`.
pub fn learning_rate_at(cfg: &TrainConfig, layer: usize, samples: u64) -> f64 {
    cfg.learning_rate / (1.0 + cfg.rate_annealing * samples as f64) * math::powi(cfg.rate_decay, layer as i32)
}

/// Linear ramp from `momentum_start` to `momentum_stable`.
pub fn momentum_at(cfg: &TrainConfig, samples: u64) -> f64 {
    if cfg.momentum_ramp <= 0.0 {
        return cfg.momentum_stable;
    }
    let frac = (samples as f64 / cfg.momentum_ramp).min(1.0);
    cfg.momentum_start + (cfg.momentum_stable - cfg.momentum_start) * frac
}

fn momentum_update(theta: &mut [f64], v: &mut [f64], g: &[f64], mu: f64, alpha: f64) {
    for ((t, v), g) in theta.iter_mut().zip(v.iter_mut()).zip(g) {
        *v = mu * *v - alpha * g;
        *t += *v;
    }
}

fn adadelta_update(theta: &mut [f64], eg2: &mut [f64], edx2: &mut [f64], g: &[f64], rho: f64, eps: f64) {
    for (((t, eg), ed), &g) in theta.iter_mut().zip(eg2.iter_mut()).zip(edx2.iter_mut()).zip(g) {
        *eg = rho * *eg + (1.0 - rho) * g * g;
        let dx = -math::sqrt(*ed + eps) / math::sqrt(*eg + eps) * g;
        *ed = rho * *ed + (1.0 - rho) * dx * dx;
        *t += dx;
    }
}

/// Rescales any row of `W` whose squared sum exceeds `max_w2`.
pub fn enforce_max_w2(net: &mut Network, max_w2: f64) {
    for layer in &mut net.layers {
        for i in 0..layer.outputs() {
            let row = layer.weights.row_mut(i);
            let sum: f64 = row.iter().map(|w| w * w).sum();
            if sum > max_w2 {
                let s = math::sqrt(max_w2 / sum);
                row.iter_mut().for_each(|w| *w *= s);
            }
        }
    }
}

/// Applies a gradient that already includes weight decay, then max_w2.
/// `batch_len` advances the sample counter after the step.
pub fn apply_gradients(
    net: &mut Network,
    grads: &Gradients,
    cfg: &TrainConfig,
    state: &mut OptimizerState,
    batch_len: usize,
) {
    let t = state.samples_seen;
    let mu = momentum_at(cfg, t);
    for (l, layer) in net.layers.iter_mut().enumerate() {
        if cfg.adaptive {
            adadelta_update(
                layer.weights.as_mut_slice(),
                state.sq_grad_w[l].as_mut_slice(),
                state.sq_step_w[l].as_mut_slice(),
                grads.dw[l].as_slice(),
                cfg.rho,
                cfg.epsilon,
            );
            adadelta_update(
                &mut layer.bias,
                &mut state.sq_grad_b[l],
                &mut state.sq_step_b[l],
                &grads.db[l],
                cfg.rho,
                cfg.epsilon,
            );
        } else {
            let alpha = learning_rate_at(cfg, l, t);
            momentum_update(
                layer.weights.as_mut_slice(),
                state.velocity_w[l].as_mut_slice(),
                grads.dw[l].as_slice(),
                mu,
                alpha,
            );
            momentum_update(&mut layer.bias, &mut state.velocity_b[l], &grads.db[l], mu, alpha);
        }
    }
    if let Some(max) = cfg.max_w2 {
        enforce_max_w2(net, max);
    }
    state.samples_seen += batch_len as u64;
}

/// One gradient step over `rows` of the data.
#[allow(clippy::too_many_arguments)]
pub fn batch_gd_step(
    net: &mut Network,
    inputs: &Matrix,
    targets: &Matrix,
    rows: &[usize],
    cfg: &TrainConfig,
    state: &mut OptimizerState,
    p_hat: Option<&[Vec<f64>]>,
    rng: &mut Rng,
) -> Result<(), NnError> {
    if rows.is_empty() {
        return Ok(());
    }
    let grads = batch_gradient(net, inputs, targets, rows, cfg, p_hat, Some(rng))?;
    apply_gradients(net, &grads, cfg, state, rows.len());
    Ok(())
}

/// One pass over the data. Mini-batches are reshuffled from `rng` each
/// epoch; p̂ is refreshed at the start when the sparsity penalty is on.
pub fn train_epoch(
    net: &mut Network,
    inputs: &Matrix,
    targets: &Matrix,
    cfg: &TrainConfig,
    state: &mut OptimizerState,
    rng: &mut Rng,
) -> Result<(), NnError> {
    let m = inputs.rows();
    if m == 0 {
        return Ok(());
    }
    if targets.rows() != m {
        return Err(NnError::ShapeMismatch { expected: m, found: targets.rows() });
    }
    let p_hat = if cfg.sparsity_beta > 0.0 { Some(average_activation(net, inputs)?) } else { None };
    let mut order: Vec<usize> = (0..m).collect();
    let size = if cfg.batch_size == 0 { m } else { cfg.batch_size.min(m) };
    if size < m {
        order.shuffle(rng);
    }
    for chunk in order.chunks(size) {
        batch_gd_step(net, inputs, targets, chunk, cfg, state, p_hat.as_deref(), rng)?;
    }
    if net.is_finite() {
        Ok(())
    } else {
        Err(NnError::NonFinite)
    }
}

/// True when the best of the last `stopping_rounds` values does not beat
/// the best before them by the relative tolerance. Lower is better.
pub fn early_stop(history: &[f64], cfg: &TrainConfig) -> bool {
    let k = cfg.stopping_rounds;
    if k == 0 || history.len() <= k {
        return false;
    }
    let split = history.len() - k;
    let min = |s: &[f64]| s.iter().copied().fold(f64::INFINITY, f64::min);
    let prior = min(&history[..split]);
    let recent = min(&history[split..]);
    let gain = prior - recent;
    gain <= 0.0 || gain < cfg.stopping_tolerance * math::abs(prior)
}
