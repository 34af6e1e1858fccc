//! Fully connected network with ReLU hidden layers and a sigmoid output,
//! trained on binary cross-entropy by mini-batch gradient descent with
//! momentum.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbt::{sigmoid, softplus};
use super::{HyperReader, ModelSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;
/// Denominator floor in the relative-error measure, so parameters with
/// vanishing gradients compare on absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl MlpParams {
    pub const KEYS: &'static [&'static str] = &[
        "hidden1",
        "hidden2",
        "learning_rate",
        "momentum",
        "batch_size",
        "epochs",
    ];

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let h = HyperReader::new(spec, Self::KEYS)?;
        Ok(MlpParams {
            hidden: vec![h.usize_or("hidden1", 64, 1)?, h.usize_or("hidden2", 32, 1)?],
            learning_rate: h.f64_in("learning_rate", 0.01, 0.0, f64::INFINITY, false)?,
            momentum: h.f64_in("momentum", 0.9, 0.0, 1.0, true)?,
            batch_size: h.usize_or("batch_size", 64, 1)?,
            epochs: h.usize_or("epochs", 50, 1)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (o, z) in out.iter_mut().enumerate() {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut s = self.bias[o];
            for (a, b) in w.iter().zip(input) {
                s += a * b;
            }
            *z = s;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Per-layer gradients, same shapes as the network.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Starting value for hidden-layer biases.
pub const HIDDEN_BIAS_INIT: f64 = 0.01;

impl Network {
    /// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)). Hidden biases
    /// start slightly positive so a dead layer does not park the next
    /// pre-activation exactly on the ReLU kink; the output bias starts at 0.
    pub fn glorot<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        let last = sizes.len().saturating_sub(2);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut l = Layer::zeros(fan_in, fan_out);
                l.weights
                    .iter_mut()
                    .for_each(|v| *v = rng.random_range(-limit..=limit));
                if i < last {
                    l.bias.fill(HIDDEN_BIAS_INIT);
                }
                l
            })
            .collect();
        Network { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Network {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return &mut l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Output logit for one input row.
    pub fn logit(&self, input: &[f64]) -> f64 {
        let mut a = input.to_vec();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; l.outputs];
            l.affine(&a, &mut z);
            if li < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a[0]
    }

    /// Mean binary cross-entropy over `rows`.
    pub fn loss(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> f64 {
        rows.iter()
            .map(|&i| {
                let z = self.logit(x.row(i));
                if y[i] == 1 {
                    softplus(-z)
                } else {
                    softplus(z)
                }
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    /// Backpropagated gradient of [`Network::loss`] over `rows`.
    pub fn gradients(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> Gradients {
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        self.accumulate(x, y, rows, &mut grads);
        grads
    }

    fn accumulate(&self, x: &Matrix, y: &[u8], rows: &[usize], grads: &mut Gradients) {
        let nl = self.layers.len();
        for g in &mut grads.layers {
            g.weights.iter_mut().for_each(|v| *v = 0.0);
            g.bias.iter_mut().for_each(|v| *v = 0.0);
        }
        // activations[0] is the input; activations[l+1] the output of layer l
        let mut acts: Vec<Vec<f64>> = std::iter::once(vec![0.0; self.n_inputs()])
            .chain(self.layers.iter().map(|l| vec![0.0; l.outputs]))
            .collect();
        let mut deltas: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        for &r in rows {
            acts[0].copy_from_slice(x.row(r));
            for (li, l) in self.layers.iter().enumerate() {
                let (head, tail) = acts.split_at_mut(li + 1);
                l.affine(&head[li], &mut tail[0]);
                if li + 1 < nl {
                    tail[0].iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
            deltas[nl - 1][0] = sigmoid(acts[nl][0]) - y[r] as f64;
            for li in (0..nl).rev() {
                let l = &self.layers[li];
                let g = &mut grads.layers[li];
                let input = &acts[li];
                for o in 0..l.outputs {
                    let d = deltas[li][o];
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[o] += d;
                    let gw = &mut g.weights[o * l.inputs..(o + 1) * l.inputs];
                    for (gv, a) in gw.iter_mut().zip(input) {
                        *gv += d * a;
                    }
                }
                if li > 0 {
                    let (lower, upper) = deltas.split_at_mut(li);
                    let prev = &mut lower[li - 1];
                    prev.iter_mut().for_each(|v| *v = 0.0);
                    for o in 0..l.outputs {
                        let d = upper[0][o];
                        if d == 0.0 {
                            continue;
                        }
                        let w = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                        for (p, wv) in prev.iter_mut().zip(w) {
                            *p += d * wv;
                        }
                    }
                    // ReLU derivative, taken as 0 at the kink
                    for (p, a) in prev.iter_mut().zip(&acts[li]) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                }
            }
        }
        let scale = 1.0 / rows.len() as f64;
        for g in &mut grads.layers {
            g.weights.iter_mut().for_each(|v| *v *= scale);
            g.bias.iter_mut().for_each(|v| *v *= scale);
        }
    }

    fn flat(grads: &Gradients) -> Vec<f64> {
        grads
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub network: Network,
    /// Mean training loss after each epoch.
    pub epoch_loss: Vec<f64>,
}

impl Mlp {
    pub fn layer_sizes(n_features: usize, params: &MlpParams) -> Vec<usize> {
        let mut sizes = vec![n_features];
        sizes.extend(&params.hidden);
        sizes.push(1);
        sizes
    }

    pub fn fit(params: &MlpParams, train: &Dataset, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::glorot(&Self::layer_sizes(train.n_features(), params), &mut rng);
        let mut velocity = Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let mut grads = velocity.clone();
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut epoch_loss = Vec::with_capacity(params.epochs);
        let all: Vec<usize> = (0..train.len()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                net.accumulate(&train.x, &train.y, batch, &mut grads);
                for ((l, v), g) in net.layers.iter_mut().zip(&mut velocity.layers).zip(&grads.layers) {
                    for ((w, vw), gw) in l.weights.iter_mut().zip(&mut v.weights).zip(&g.weights) {
                        *vw = params.momentum * *vw - params.learning_rate * gw;
                        *w += *vw;
                    }
                    for ((b, vb), gb) in l.bias.iter_mut().zip(&mut v.bias).zip(&g.bias) {
                        *vb = params.momentum * *vb - params.learning_rate * gb;
                        *b += *vb;
                    }
                }
            }
            epoch_loss.push(net.loss(&train.x, &train.y, &all));
        }
        Mlp {
            network: net,
            epoch_loss,
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| sigmoid(self.network.logit(r))).collect()
    }
}

/// Largest relative difference between backpropagated and central
/// finite-difference gradients over every parameter.
pub fn max_relative_gradient_error(net: &Network, x: &Matrix, y: &[u8], step: f64) -> f64 {
    let rows: Vec<usize> = (0..x.rows()).collect();
    let analytic = Network::flat(&net.gradients(x, y, &rows));
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + step;
        let up = probe.loss(x, y, &rows);
        *probe.param_mut(i) = orig - step;
        let down = probe.loss(x, y, &rows);
        *probe.param_mut(i) = orig;
        let numeric = (up - down) / (2.0 * step);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

/// Gradient check of the network `spec` would initialize, on a tiny dataset
/// (at most 10 rows and 5 features).
pub fn gradient_check(spec: &ModelSpec, tiny: &Dataset) -> Result<f64> {
    if tiny.len() > 10 || tiny.n_features() > 5 || tiny.is_empty() {
        return Err(Error::invalid(
            "gradient check expects 1..=10 rows and at most 5 features",
        ));
    }
    let params = MlpParams::from_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let net = Network::glorot(&Mlp::layer_sizes(tiny.n_features(), &params), &mut rng);
    Ok(max_relative_gradient_error(&net, &tiny.x, &tiny.y, FD_STEP))
}
