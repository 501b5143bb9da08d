//! Minimal dense network with hand-written backprop.
//!
//! Hidden layers apply tanh; the output layer is affine. Weights are stored
//! row-major (out x in), which is also the checkpoint layout. Gradients and
//! Adam moments mirror the parameter shapes through the flat views.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// One affine layer, `out_dim x in_dim` weights stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn init<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
        }
    }

    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }
}

/// Feed-forward network: affine layers with tanh between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer activations retained for the backward pass.
/// `activations[0]` is the input; `activations[l + 1]` is layer l's output
/// (post-tanh for hidden layers, affine for the last).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds the input at least")
    }
}

/// Gradient accumulator with the same shapes as the network.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<Layer>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().iter().fold(0.0f64, |m, g| m.max(g.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(&l.weights);
        out.extend_from_slice(&l.biases);
    }
    out
}

impl Mlp {
    /// Builds a network with the given layer widths (`dims[0]` inputs,
    /// `dims.last()` outputs), weights uniform in +-1/sqrt(fan_in), zero
    /// biases.
    pub fn init<R: Rng>(dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        let layers = dims
            .windows(2)
            .map(|w| Layer::init(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let layers = dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().expect("non-empty").in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut cache = self.forward_cached(input);
        cache.activations.pop().expect("forward produces an output")
    }

    pub fn forward_cached(&self, input: &[f64]) -> ForwardCache {
        debug_assert_eq!(input.len(), self.input_dim());
        let n = self.layers.len();
        let mut activations = Vec::with_capacity(n + 1);
        activations.push(input.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = &activations[l];
            let mut out = vec![0.0; layer.out_dim];
            for i in 0..layer.out_dim {
                let row = &layer.weights[i * layer.in_dim..(i + 1) * layer.in_dim];
                let mut acc = layer.biases[i];
                for (w, a) in row.iter().zip(prev.iter()) {
                    acc += w * a;
                }
                out[i] = if l + 1 < n { acc.tanh() } else { acc };
            }
            activations.push(out);
        }
        ForwardCache { activations }
    }

    /// Backpropagates `grad_output` (dLoss/d output) through the cached
    /// forward pass, accumulating parameter gradients into `grads`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grads: &mut MlpGrads) {
        let n = self.layers.len();
        debug_assert_eq!(grad_output.len(), self.output_dim());
        let mut grad = grad_output.to_vec();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            // Output of this layer sits at activations[l + 1]; hidden layers
            // carry tanh whose derivative is 1 - a^2.
            if l != n - 1 {
                for (g, a) in grad.iter_mut().zip(cache.activations[l + 1].iter()) {
                    *g *= 1.0 - a * a;
                }
            }
            let prev = &cache.activations[l];
            let gl = &mut grads.layers[l];
            for i in 0..layer.out_dim {
                let gi = grad[i];
                gl.biases[i] += gi;
                let row = &mut gl.weights[i * layer.in_dim..(i + 1) * layer.in_dim];
                for (w, a) in row.iter_mut().zip(prev.iter()) {
                    *w += gi * a;
                }
            }
            if l > 0 {
                let mut grad_prev = vec![0.0; layer.in_dim];
                for i in 0..layer.out_dim {
                    let gi = grad[i];
                    let row = &layer.weights[i * layer.in_dim..(i + 1) * layer.in_dim];
                    for (gp, w) in grad_prev.iter_mut().zip(row.iter()) {
                        *gp += gi * w;
                    }
                }
                grad = grad_prev;
            }
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for l in self.layers.iter_mut() {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[offset..offset + nw]);
            offset += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[offset..offset + nb]);
            offset += nb;
        }
        debug_assert_eq!(offset, flat.len());
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Log-softmax: logits - logsumexp(logits).
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|&z| z - lse).collect()
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.t
    }

    /// One bias-corrected moment update, in place on `params`.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), grads.len());
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let b2t = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}
