// Central finite differences over every weight and bias.

use episae_core::matrix::Matrix;
use episae_core::nn::{Activation, Gradients, Network};
use episae_core::rng::Rng;
use rand::Rng as _;

pub const STEP: f64 = 1e-5;

pub fn numeric_gradient(net: &Network, f: impl Fn(&Network) -> f64) -> Gradients {
    fd_gradient(net, f, |g| (g(STEP) - g(-STEP)) / (2.0 * STEP))
}

/// Step of the coarser difference in [`richardson_gradient`].
pub const RICHARDSON_STEP: f64 = 2e-3;

/// Central differences at h and h/2 combined as (4 D(h/2) - D(h)) / 3,
/// which cancels the h² term. Roundoff stays near eps·|f|/h, so costs of
/// large magnitude keep ~1e-12 accuracy where a 1e-5 step would not.
pub fn richardson_gradient(net: &Network, f: impl Fn(&Network) -> f64) -> Gradients {
    let h = RICHARDSON_STEP;
    fd_gradient(net, f, |g| {
        let coarse = (g(h) - g(-h)) / (2.0 * h);
        let fine = (g(h / 2.0) - g(-h / 2.0)) / h;
        (4.0 * fine - coarse) / 3.0
    })
}

/// Applies `stencil` to every parameter; the stencil evaluates the cost at
/// `parameter + delta` through its argument.
fn fd_gradient(
    net: &Network,
    f: impl Fn(&Network) -> f64,
    stencil: impl Fn(&mut dyn FnMut(f64) -> f64) -> f64,
) -> Gradients {
    let mut probe = net.clone();
    let mut g = Gradients::zeros_like(net);
    for l in 0..net.layers.len() {
        for k in 0..net.layers[l].weights.as_slice().len() {
            let orig = net.layers[l].weights.as_slice()[k];
            g.dw[l].as_mut_slice()[k] = stencil(&mut |d: f64| {
                probe.layers[l].weights.as_mut_slice()[k] = orig + d;
                let v = f(&probe);
                probe.layers[l].weights.as_mut_slice()[k] = orig;
                v
            });
        }
        for k in 0..net.layers[l].bias.len() {
            let orig = net.layers[l].bias[k];
            g.db[l][k] = stencil(&mut |d: f64| {
                probe.layers[l].bias[k] = orig + d;
                let v = f(&probe);
                probe.layers[l].bias[k] = orig;
                v
            });
        }
    }
    g
}

/// `|a - n| / max(|a|, |n|)`, with the denominator floored at 1e-3 so that
/// partials near zero are judged on the difference-quotient's own noise.
pub fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-3)
}

pub fn max_rel_error(analytic: &Gradients, numeric: &Gradients) -> f64 {
    let mut worst = 0.0f64;
    for l in 0..analytic.dw.len() {
        for (a, n) in analytic.dw[l].as_slice().iter().zip(numeric.dw[l].as_slice()) {
            worst = worst.max(rel_error(*a, *n));
        }
        for (a, n) in analytic.db[l].iter().zip(&numeric.db[l]) {
            worst = worst.max(rel_error(*a, *n));
        }
    }
    worst
}

pub struct Case {
    pub net: Network,
    pub inputs: Matrix,
    pub targets: Matrix,
}

/// Random net with 2..=4 layers of at most 20 units. `hidden` is used for
/// every hidden layer, `output` for the last one.
pub fn random_case(rng: &mut Rng, hidden: Activation, output: Activation, m: usize) -> Case {
    let depth = rng.gen_range(2..=4);
    let sizes: Vec<usize> = (0..=depth).map(|_| rng.gen_range(2..=20)).collect();
    let mut acts = vec![hidden; depth - 1];
    acts.push(output);
    let net = Network::random(&sizes, &acts, rng);
    let n_in = sizes[0];
    let n_out = *sizes.last().unwrap();
    let inputs = Matrix::from_vec(m, n_in, (0..m * n_in).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let targets = if output == Activation::Softmax {
        let mut t = Matrix::zeros(m, n_out);
        for i in 0..m {
            let k = rng.gen_range(0..n_out);
            t.row_mut(i)[k] = 1.0;
        }
        t
    } else {
        Matrix::from_vec(m, n_out, (0..m * n_out).map(|_| rng.gen_range(0.0..1.0)).collect())
    };
    Case { net, inputs, targets }
}

/// Smallest |z| over ReLU units; finite differences are valid when this
/// exceeds the largest change a step can cause.
pub fn min_relu_margin(case: &Case) -> f64 {
    let mut margin = f64::INFINITY;
    for x in case.inputs.iter_rows() {
        let trace = case.net.forward(x).unwrap();
        for (layer, z) in case.net.layers.iter().zip(&trace.z) {
            if layer.activation == Activation::Relu {
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            }
        }
    }
    margin
}
