//! Feed-forward channel regressor trained as a nonlinear MMSE estimator.
//!
//! The network maps real-stacked quantizer codes `r^R` (width 2*tau*M) to a
//! real-stacked channel estimate (width 2*K*M) through three hidden layers of
//! width 2*tau*M: two Dense+BatchNorm+ReLU blocks, then a Dense+Tanh block
//! whose input also receives an additive skip connection from the network
//! input, followed by a linear output layer.
//!
//! Training data is streamed: channels and noise are resampled every epoch
//! from per-epoch RNG streams, so the model never sees the same batch twice
//! and cannot overfit a finite dataset. Validation data comes from a separate
//! stream and is fixed for the whole run.

use std::io::Write as _;
use std::path::Path;

use crate::channel::{real_stack, vectorize, ChannelModel};
use crate::error::{Error, Result};
use crate::nn::layers::{BatchNorm, Dense, Mode};
use crate::nn::tensor::Tensor;
use crate::nn::{mse_loss, Layer, Network};
use crate::pilot::{effective_apply, PilotMatrix};
use crate::quantizer::{quantize, QuantizerSpec};
use crate::rng::{complex_normal, stream};
use rand::Rng;

/// Stream labels shared with autoencoder training so that a frozen-pilot
/// autoencoder run consumes identical data draws.
pub(crate) const TRAIN_DATA_LABEL: &str = "train-data";
pub(crate) const VAL_DATA_LABEL: &str = "val-data";

/// Dimensions of the regression task; all layer widths derive from these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegressorConfig {
    pub tau: usize,
    pub m: usize,
    pub k: usize,
}

impl RegressorConfig {
    pub fn new(tau: usize, m: usize, k: usize) -> Result<Self> {
        if tau == 0 || m == 0 || k == 0 {
            return Err(Error::Dimension(format!(
                "regressor dims must be positive, got tau={tau}, M={m}, K={k}"
            )));
        }
        Ok(Self { tau, m, k })
    }

    /// Input and hidden width 2*tau*M.
    pub fn input_width(&self) -> usize {
        2 * self.tau * self.m
    }

    /// Output width 2*K*M.
    pub fn output_width(&self) -> usize {
        2 * self.k * self.m
    }

    /// Trainable parameter count: with h = 2*tau*M and o = 2*K*M, three h x h
    /// dense layers plus the h x o output layer and their biases contribute
    /// 3h^2 + ho + 3h + o; the two batch-norm layers add 2h (gamma, beta)
    /// each.
    pub fn param_count(&self) -> usize {
        let h = self.input_width();
        let o = self.output_width();
        3 * h * h + h * o + 3 * h + o + 4 * h
    }
}

/// Wire the regressor graph. The input skip lands on the third hidden dense
/// layer's input, which is well-formed because input and hidden widths agree.
pub fn build_regressor<R: Rng + ?Sized>(config: RegressorConfig, rng: &mut R) -> Network {
    let h = config.input_width();
    let o = config.output_width();
    let layers = vec![
        Layer::Dense(Dense::glorot(h, h, rng)),
        Layer::BatchNorm(BatchNorm::new(h)),
        Layer::Relu,
        Layer::Dense(Dense::glorot(h, h, rng)),
        Layer::BatchNorm(BatchNorm::new(h)),
        Layer::Relu,
        Layer::Dense(Dense::glorot(h, h, rng)),
        Layer::Tanh,
        Layer::Dense(Dense::glorot(h, o, rng)),
    ];
    Network::new(layers, Some(6))
}

/// Draw one (input, target) pair: h from the channel model, y = Phi_bar h + n
/// with n ~ CN(0, N0 I), then r = Q_b(y) elementwise on the real stack. The
/// input is the quantizer's optimal reconstruction levels normalized by the
/// quantizer input sigma (near-unit variance); with `spec = None` the
/// unquantized y^R is passed through with the same sqrt((K rho + N0)/2)
/// normalization, which gives the linear Gaussian task.
pub fn generate_training_pair<R: Rng + ?Sized>(
    model: &ChannelModel,
    pilot: &PilotMatrix,
    rho: f64,
    n0: f64,
    spec: Option<&QuantizerSpec>,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = model.sample(rng);
    let h_vec = vectorize(&h);
    let mut y = effective_apply(pilot, rho, &h_vec, model.m)?;
    if n0 > 0.0 {
        for v in y.iter_mut() {
            *v += complex_normal(rng, n0);
        }
    }
    let y_re = real_stack(&y);
    let input = match spec {
        Some(s) => {
            let (_, codes) = quantize(&y_re, s)?;
            codes.into_iter().map(|c| s.optimal_level(c) / s.sigma).collect()
        }
        None => {
            let var = (model.k as f64 * rho + n0) / 2.0;
            let sigma = if var > 0.0 { var.sqrt() } else { 1.0 };
            y_re.into_iter().map(|v| v / sigma).collect()
        }
    };
    Ok((input, real_stack(&h_vec)))
}

/// Stack `count` training pairs into row-major batch tensors.
pub fn generate_batch<R: Rng + ?Sized>(
    model: &ChannelModel,
    pilot: &PilotMatrix,
    rho: f64,
    n0: f64,
    spec: Option<&QuantizerSpec>,
    count: usize,
    rng: &mut R,
) -> Result<(Tensor, Tensor)> {
    let in_w = 2 * pilot.tau() * model.m;
    let out_w = 2 * model.k * model.m;
    let mut x = Tensor::zeros(count, in_w);
    let mut t = Tensor::zeros(count, out_w);
    for row in 0..count {
        let (input, target) = generate_training_pair(model, pilot, rho, n0, spec, rng)?;
        x.row_mut(row).copy_from_slice(&input);
        t.row_mut(row).copy_from_slice(&target);
    }
    Ok((x, t))
}

/// Training-loop knobs. `train_samples` is the number of fresh pairs drawn per
/// epoch (streaming), not a dataset size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub train_samples: usize,
    pub val_samples: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    /// Multiplicative learning-rate factor applied after every epoch
    /// (1.0 disables the schedule).
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            train_samples: 200_000,
            val_samples: 10_000,
            batch_size: 256,
            max_epochs: 50,
            patience: 5,
            learning_rate: 1e-3,
            lr_decay: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_samples == 0
            || self.val_samples == 0
            || self.batch_size == 0
            || self.max_epochs == 0
            || self.patience == 0
        {
            return Err(Error::Config("all training counts must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

/// Mean MSE over a dataset, evaluated in Eval mode in `batch_size` chunks.
pub fn evaluate_mse(net: &mut Network, x: &Tensor, t: &Tensor, batch_size: usize) -> Result<f64> {
    if x.rows != t.rows {
        return Err(Error::Dimension(format!(
            "eval input rows {} != target rows {}",
            x.rows, t.rows
        )));
    }
    let mut total = 0.0;
    let mut start = 0;
    while start < x.rows {
        let end = (start + batch_size).min(x.rows);
        let xb = slice_rows(x, start, end);
        let tb = slice_rows(t, start, end);
        let cache = net.forward(&xb, Mode::Eval)?;
        let (loss, _) = mse_loss(&cache.output, &tb)?;
        total += loss * (end - start) as f64;
        start = end;
    }
    Ok(total / x.rows as f64)
}

fn slice_rows(x: &Tensor, start: usize, end: usize) -> Tensor {
    Tensor {
        rows: end - start,
        cols: x.cols,
        data: x.data[start * x.cols..end * x.cols].to_vec(),
    }
}

/// Adam training with per-epoch streaming data and early stopping on the
/// validation MSE. On return, `net` holds the best-validation checkpoint
/// (including batch-norm running statistics).
pub fn train_regressor(
    net: &mut Network,
    model: &ChannelModel,
    pilot: &PilotMatrix,
    rho: f64,
    n0: f64,
    spec: Option<&QuantizerSpec>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut val_rng = stream(config.seed, VAL_DATA_LABEL, 0);
    let (val_x, val_t) =
        generate_batch(model, pilot, rho, n0, spec, config.val_samples, &mut val_rng)?;

    let mut adam = crate::nn::adam::AdamState::new(net.param_count(), config.learning_rate);
    let mut params = net.params_flat();
    let batches = (config.train_samples / config.batch_size).max(1);

    let mut history = Vec::new();
    let mut best_net = net.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        let mut data_rng = stream(config.seed, TRAIN_DATA_LABEL, epoch as u64);
        let mut epoch_loss = 0.0;
        for _ in 0..batches {
            let (x, t) = generate_batch(
                model,
                pilot,
                rho,
                n0,
                spec,
                config.batch_size,
                &mut data_rng,
            )?;
            let cache = net
                .forward(&x, Mode::Train)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            let (loss, grad) = mse_loss(&cache.output, &t)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "training diverged at epoch {epoch}: loss = {loss}"
                )));
            }
            let (_, layer_grads) = net
                .backward(&cache, &grad)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            adam.step(&mut params, &net.grads_flat(&layer_grads))?;
            net.set_params_flat(&params)?;
            epoch_loss += loss;
        }
        let train_mse = epoch_loss / batches as f64;
        let val_mse = evaluate_mse(net, &val_x, &val_t, config.batch_size)
            .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
        history.push(EpochRecord { epoch, train_mse, val_mse });

        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best_net = net.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
        adam.lr *= config.lr_decay;
    }

    *net = best_net;
    Ok(TrainOutcome { history, best_epoch, best_val_mse: best_val })
}

/// Deterministic Eval-mode forward pass; one row per sample.
pub fn estimate(net: &mut Network, input: &Tensor) -> Result<Tensor> {
    Ok(net.forward(input, Mode::Eval)?.output)
}

/// Training log with the frozen header `epoch,train_mse,val_mse`.
pub fn write_history_csv(history: &[EpochRecord], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "epoch,train_mse,val_mse")?;
    for rec in history {
        writeln!(f, "{},{:e},{:e}", rec.epoch, rec.train_mse, rec.val_mse)?;
    }
    Ok(())
}
