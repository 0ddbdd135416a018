//! Minimal reverse-mode autodiff over a fixed layer vocabulary.
//!
//! A [`Network`] is a sequential stack of layers with one optional additive
//! skip from the network input into a later layer's input. Forward passes
//! cache per-layer inputs; the backward pass walks the stack in reverse and
//! produces exact adjoints (the quantizer node substitutes its
//! straight-through surrogate). Everything is 64-bit and single-threaded, so
//! a fixed seed reproduces training bit-for-bit.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod tensor;

pub use adam::AdamState;
pub use layers::{
    mse_loss, BatchNorm, Dense, Mode, QuantizeForward, QuantizeNode, SteKind,
};
pub use tensor::Tensor;

use crate::error::{Error, Result};
use layers::BatchNormCache;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Relu,
    Tanh,
    BatchNorm(BatchNorm),
    Quantize(QuantizeNode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    /// Add the network input to the input of this layer index.
    pub skip_into: Option<usize>,
}

/// Per-layer state captured by a forward pass for use in backward.
pub struct ForwardCache {
    /// Input seen by each layer (after any skip addition).
    inputs: Vec<Tensor>,
    bn: Vec<Option<BatchNormCache>>,
    tanh_out: Vec<Option<Tensor>>,
    pub output: Tensor,
}

/// Gradients aligned with [`Network::layers`].
pub enum LayerGrads {
    None,
    Dense { grad_w: Vec<f64>, grad_b: Vec<f64> },
    BatchNorm { grad_gamma: Vec<f64>, grad_beta: Vec<f64> },
}

impl Network {
    pub fn new(layers: Vec<Layer>, skip_into: Option<usize>) -> Self {
        Self { layers, skip_into }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<ForwardCache> {
        self.forward_impl(x, mode, mode == Mode::Train)
    }

    /// Forward pass with running-statistic updates disabled; used by gradient
    /// checks, which must not mutate state between evaluations.
    pub fn forward_frozen(&mut self, x: &Tensor, mode: Mode) -> Result<ForwardCache> {
        self.forward_impl(x, mode, false)
    }

    fn forward_impl(&mut self, x: &Tensor, mode: Mode, update_running: bool) -> Result<ForwardCache> {
        x.check_finite("network input")?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut bn = Vec::with_capacity(n);
        let mut tanh_out: Vec<Option<Tensor>> = Vec::with_capacity(n);
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            if self.skip_into == Some(i) {
                cur.add_assign(x)?;
            }
            inputs.push(cur.clone());
            let (next, bcache, tout) = match layer {
                Layer::Dense(d) => (d.forward(&cur)?, None, None),
                Layer::Relu => (layers::relu_forward(&cur), None, None),
                Layer::Tanh => {
                    let y = layers::tanh_forward(&cur);
                    (y.clone(), None, Some(y))
                }
                Layer::BatchNorm(b) => {
                    let (y, c) = b.forward(&cur, mode, update_running)?;
                    (y, c, None)
                }
                Layer::Quantize(q) => (q.forward(&cur)?, None, None),
            };
            next.check_finite(&format!("layer {i} output"))?;
            bn.push(bcache);
            tanh_out.push(tout);
            cur = next;
        }
        Ok(ForwardCache { inputs, bn, tanh_out, output: cur })
    }

    /// Back-propagate `grad_out` through the stack; returns the gradient with
    /// respect to the network input and per-layer parameter gradients.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Tensor) -> Result<(Tensor, Vec<LayerGrads>)> {
        let mut grads: Vec<LayerGrads> = (0..self.layers.len()).map(|_| LayerGrads::None).collect();
        let mut g = grad_out.clone();
        let mut skip_grad: Option<Tensor> = None;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[i];
            g = match layer {
                Layer::Dense(d) => {
                    let (gx, gw, gb) = d.backward(x, &g);
                    grads[i] = LayerGrads::Dense { grad_w: gw, grad_b: gb };
                    gx
                }
                Layer::Relu => layers::relu_backward(x, &g),
                Layer::Tanh => layers::tanh_backward(cache.tanh_out[i].as_ref().unwrap(), &g),
                Layer::BatchNorm(b) => {
                    let (gx, gg, gb) = b.backward(x, &g, cache.bn[i].as_ref());
                    grads[i] = LayerGrads::BatchNorm { grad_gamma: gg, grad_beta: gb };
                    gx
                }
                Layer::Quantize(q) => q.backward(x, &g),
            };
            g.check_finite(&format!("layer {i} gradient"))?;
            if self.skip_into == Some(i) {
                skip_grad = Some(g.clone());
            }
        }
        if let Some(s) = skip_grad {
            g.add_assign(&s)?;
        }
        Ok((g, grads))
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.weights.len() + d.bias.len(),
                Layer::BatchNorm(b) => b.gamma.len() + b.beta.len(),
                _ => 0,
            })
            .sum()
    }

    /// Trainable parameters flattened in layer order (running statistics are
    /// state, not parameters).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            match l {
                Layer::Dense(d) => {
                    out.extend_from_slice(&d.weights);
                    out.extend_from_slice(&d.bias);
                }
                Layer::BatchNorm(b) => {
                    out.extend_from_slice(&b.gamma);
                    out.extend_from_slice(&b.beta);
                }
                _ => {}
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "expected {} params, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut off = 0;
        let mut take = |n: usize| {
            let s = &params[off..off + n];
            off += n;
            s
        };
        for l in &mut self.layers {
            match l {
                Layer::Dense(d) => {
                    let n = d.weights.len();
                    d.weights.copy_from_slice(take(n));
                    let n = d.bias.len();
                    d.bias.copy_from_slice(take(n));
                }
                Layer::BatchNorm(b) => {
                    let n = b.gamma.len();
                    b.gamma.copy_from_slice(take(n));
                    let n = b.beta.len();
                    b.beta.copy_from_slice(take(n));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Flatten per-layer gradients in the same order as [`params_flat`].
    pub fn grads_flat(&self, grads: &[LayerGrads]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (l, g) in self.layers.iter().zip(grads) {
            match (l, g) {
                (Layer::Dense(_), LayerGrads::Dense { grad_w, grad_b }) => {
                    out.extend_from_slice(grad_w);
                    out.extend_from_slice(grad_b);
                }
                (Layer::BatchNorm(_), LayerGrads::BatchNorm { grad_gamma, grad_beta }) => {
                    out.extend_from_slice(grad_gamma);
                    out.extend_from_slice(grad_beta);
                }
                (Layer::Dense(d), _) => out.extend(std::iter::repeat(0.0).take(d.weights.len() + d.bias.len())),
                (Layer::BatchNorm(b), _) => {
                    out.extend(std::iter::repeat(0.0).take(b.gamma.len() + b.beta.len()))
                }
                _ => {}
            }
        }
        out
    }
}
