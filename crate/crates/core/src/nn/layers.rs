//! Layer vocabulary: dense, ReLU, Tanh, batch normalization, and the
//! element-wise quantizer with a straight-through gradient surrogate.

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::quantizer::{quantize, ste_mask, QuantizerSpec};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_width: usize,
    pub out_width: usize,
    /// Row-major (in_width, out_width).
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(in_width: usize, out_width: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_width + out_width) as f64).sqrt();
        let weights =
            (0..in_width * out_width).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * limit).collect();
        Self { in_width, out_width, weights, bias: vec![0.0; out_width] }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols != self.in_width {
            return Err(Error::Dimension(format!(
                "dense expects width {}, got {}",
                self.in_width, x.cols
            )));
        }
        let mut y = Tensor::zeros(x.rows, self.out_width);
        for r in 0..x.rows {
            let xr = x.row(r);
            let yr = y.row_mut(r);
            yr.copy_from_slice(&self.bias);
            for (i, &xi) in xr.iter().enumerate() {
                let wrow = &self.weights[i * self.out_width..(i + 1) * self.out_width];
                for (yo, &w) in yr.iter_mut().zip(wrow) {
                    *yo += xi * w;
                }
            }
        }
        Ok(y)
    }

    /// Returns (grad_x, grad_w, grad_b).
    pub fn backward(&self, x: &Tensor, grad_y: &Tensor) -> (Tensor, Vec<f64>, Vec<f64>) {
        let mut grad_x = Tensor::zeros(x.rows, self.in_width);
        let mut grad_w = vec![0.0; self.weights.len()];
        let mut grad_b = vec![0.0; self.out_width];
        for r in 0..x.rows {
            let xr = x.row(r);
            let gr = grad_y.row(r);
            for (gb, &g) in grad_b.iter_mut().zip(gr) {
                *gb += g;
            }
            let gxr = grad_x.row_mut(r);
            for i in 0..self.in_width {
                let wrow = &self.weights[i * self.out_width..(i + 1) * self.out_width];
                let gwrow = &mut grad_w[i * self.out_width..(i + 1) * self.out_width];
                let xi = xr[i];
                let mut acc = 0.0;
                for ((&w, gw), &g) in wrow.iter().zip(gwrow.iter_mut()).zip(gr) {
                    acc += w * g;
                    *gw += xi * g;
                }
                gxr[i] = acc;
            }
        }
        (grad_x, grad_w, grad_b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub width: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    /// Fraction of the batch statistic blended into the running statistic.
    pub momentum: f64,
    pub epsilon: f64,
}

/// Per-batch values cached for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            momentum: 0.1,
            epsilon: 1e-5,
        }
    }

    pub fn forward(
        &mut self,
        x: &Tensor,
        mode: Mode,
        update_running: bool,
    ) -> Result<(Tensor, Option<BatchNormCache>)> {
        if x.cols != self.width {
            return Err(Error::Dimension(format!(
                "batchnorm expects width {}, got {}",
                self.width, x.cols
            )));
        }
        match mode {
            Mode::Eval => {
                let mut y = Tensor::zeros(x.rows, x.cols);
                for j in 0..self.width {
                    let inv = 1.0 / (self.running_var[j] + self.epsilon).sqrt();
                    for r in 0..x.rows {
                        y.data[r * x.cols + j] = self.gamma[j]
                            * (x.data[r * x.cols + j] - self.running_mean[j])
                            * inv
                            + self.beta[j];
                    }
                }
                Ok((y, None))
            }
            Mode::Train => {
                if x.rows < 2 {
                    return Err(Error::Training(
                        "batchnorm needs batch >= 2 in train mode".into(),
                    ));
                }
                let n = x.rows as f64;
                let mut y = Tensor::zeros(x.rows, x.cols);
                let mut xhat = Tensor::zeros(x.rows, x.cols);
                let mut inv_std = vec![0.0; self.width];
                for j in 0..self.width {
                    let mut mu = 0.0;
                    for r in 0..x.rows {
                        mu += x.data[r * x.cols + j];
                    }
                    mu /= n;
                    let mut var = 0.0;
                    for r in 0..x.rows {
                        let d = x.data[r * x.cols + j] - mu;
                        var += d * d;
                    }
                    var /= n;
                    let inv = 1.0 / (var + self.epsilon).sqrt();
                    inv_std[j] = inv;
                    for r in 0..x.rows {
                        let xh = (x.data[r * x.cols + j] - mu) * inv;
                        xhat.data[r * x.cols + j] = xh;
                        y.data[r * x.cols + j] = self.gamma[j] * xh + self.beta[j];
                    }
                    if update_running {
                        self.running_mean[j] =
                            (1.0 - self.momentum) * self.running_mean[j] + self.momentum * mu;
                        self.running_var[j] =
                            (1.0 - self.momentum) * self.running_var[j] + self.momentum * var;
                    }
                }
                Ok((y, Some(BatchNormCache { xhat, inv_std })))
            }
        }
    }

    /// Returns (grad_x, grad_gamma, grad_beta); exact through batch statistics
    /// in train mode, through the affine map alone in eval mode.
    pub fn backward(
        &self,
        x: &Tensor,
        grad_y: &Tensor,
        cache: Option<&BatchNormCache>,
    ) -> (Tensor, Vec<f64>, Vec<f64>) {
        let mut grad_x = Tensor::zeros(grad_y.rows, grad_y.cols);
        let mut grad_gamma = vec![0.0; self.width];
        let mut grad_beta = vec![0.0; self.width];
        match cache {
            Some(c) => {
                let n = grad_y.rows as f64;
                for j in 0..self.width {
                    let mut sum_g = 0.0;
                    let mut sum_gx = 0.0;
                    for r in 0..grad_y.rows {
                        let g = grad_y.data[r * grad_y.cols + j];
                        sum_g += g;
                        sum_gx += g * c.xhat.data[r * grad_y.cols + j];
                    }
                    grad_beta[j] = sum_g;
                    grad_gamma[j] = sum_gx;
                    let scale = self.gamma[j] * c.inv_std[j];
                    for r in 0..grad_y.rows {
                        let g = grad_y.data[r * grad_y.cols + j];
                        let xh = c.xhat.data[r * grad_y.cols + j];
                        grad_x.data[r * grad_y.cols + j] =
                            scale * (g - sum_g / n - xh * sum_gx / n);
                    }
                }
            }
            None => {
                // eval mode: a per-feature affine map with the running
                // statistics as constants
                for j in 0..self.width {
                    let inv = 1.0 / (self.running_var[j] + self.epsilon).sqrt();
                    for r in 0..grad_y.rows {
                        let g = grad_y.data[r * grad_y.cols + j];
                        let xh = (x.data[r * x.cols + j] - self.running_mean[j]) * inv;
                        grad_x.data[r * grad_y.cols + j] = self.gamma[j] * inv * g;
                        grad_gamma[j] += g * xh;
                        grad_beta[j] += g;
                    }
                }
            }
        }
        (grad_x, grad_gamma, grad_beta)
    }
}

/// What the quantizer node computes on the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizeForward {
    /// Optimal reconstruction levels of the configured quantizer, divided by
    /// the quantizer input sigma so the output has near-unit variance at any
    /// resolution and SNR.
    Levels,
    /// Clamp to the unsaturated range; smooth surrogate for gradient checks.
    ClippedIdentity,
    /// Pass through unchanged.
    Identity,
}

/// Backward surrogate of the quantizer node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteKind {
    /// Pass gradient only where the input is unsaturated.
    Clipped,
    /// Plain pass-through.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeNode {
    pub spec: QuantizerSpec,
    pub forward: QuantizeForward,
    pub ste: SteKind,
}

impl QuantizeNode {
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let data = match self.forward {
            QuantizeForward::Levels => {
                let (_, codes) = quantize(&x.data, &self.spec)?;
                codes.into_iter().map(|c| self.spec.optimal_level(c) / self.spec.sigma).collect()
            }
            QuantizeForward::ClippedIdentity => {
                let clip = self.spec.clip();
                x.data.iter().map(|&v| v.clamp(-clip, clip)).collect()
            }
            QuantizeForward::Identity => x.data.clone(),
        };
        Tensor::from_vec(x.rows, x.cols, data)
    }

    pub fn backward(&self, x: &Tensor, grad_y: &Tensor) -> Tensor {
        // the Levels forward divides by sigma, so its straight-through
        // surrogate carries the same 1/sigma factor
        let scale = match self.forward {
            QuantizeForward::Levels => 1.0 / self.spec.sigma,
            _ => 1.0,
        };
        match self.ste {
            SteKind::Clipped => {
                let mask = ste_mask(&x.data, &self.spec);
                let data =
                    grad_y.data.iter().zip(mask).map(|(&g, m)| g * m * scale).collect();
                Tensor { rows: grad_y.rows, cols: grad_y.cols, data }
            }
            SteKind::Identity if scale != 1.0 => {
                let data = grad_y.data.iter().map(|&g| g * scale).collect();
                Tensor { rows: grad_y.rows, cols: grad_y.cols, data }
            }
            SteKind::Identity => grad_y.clone(),
        }
    }
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    Tensor {
        rows: x.rows,
        cols: x.cols,
        data: x.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

pub fn relu_backward(x: &Tensor, grad_y: &Tensor) -> Tensor {
    Tensor {
        rows: x.rows,
        cols: x.cols,
        data: x.data.iter().zip(&grad_y.data).map(|(&v, &g)| if v > 0.0 { g } else { 0.0 }).collect(),
    }
}

pub fn tanh_forward(x: &Tensor) -> Tensor {
    Tensor { rows: x.rows, cols: x.cols, data: x.data.iter().map(|v| v.tanh()).collect() }
}

pub fn tanh_backward(y: &Tensor, grad_y: &Tensor) -> Tensor {
    Tensor {
        rows: y.rows,
        cols: y.cols,
        data: y.data.iter().zip(&grad_y.data).map(|(&t, &g)| g * (1.0 - t * t)).collect(),
    }
}

/// Mean over batch and features of the squared error, with its gradient.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.rows != target.rows || pred.cols != target.cols {
        return Err(Error::Dimension(format!(
            "mse shapes {}x{} vs {}x{}",
            pred.rows, pred.cols, target.rows, target.cols
        )));
    }
    let n = (pred.rows * pred.cols) as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.rows, pred.cols);
    for (i, (&p, &t)) in pred.data.iter().zip(&target.data).enumerate() {
        let d = p - t;
        loss += d * d;
        grad.data[i] = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}
