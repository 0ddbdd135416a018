//! Central finite-difference verification of the backward pass.

use super::layers::{mse_loss, Mode};
use super::tensor::Tensor;
use super::Network;
use crate::error::Result;

/// Analytic parameter gradients of the MSE loss, flattened in layer order.
pub fn analytic_grads(
    net: &mut Network,
    input: &Tensor,
    target: &Tensor,
    mode: Mode,
) -> Result<Vec<f64>> {
    let cache = net.forward_frozen(input, mode)?;
    let (_, grad) = mse_loss(&cache.output, target)?;
    let (_, layer_grads) = net.backward(&cache, &grad)?;
    Ok(net.grads_flat(&layer_grads))
}

/// Central-difference parameter gradients with the given step.
pub fn numeric_grads(
    net: &mut Network,
    input: &Tensor,
    target: &Tensor,
    mode: Mode,
    step: f64,
) -> Result<Vec<f64>> {
    let base = net.params_flat();
    let mut out = vec![0.0; base.len()];
    let mut params = base.clone();
    for i in 0..base.len() {
        params[i] = base[i] + step;
        net.set_params_flat(&params)?;
        let lp = eval_loss(net, input, target, mode)?;
        params[i] = base[i] - step;
        net.set_params_flat(&params)?;
        let lm = eval_loss(net, input, target, mode)?;
        params[i] = base[i];
        out[i] = (lp - lm) / (2.0 * step);
    }
    net.set_params_flat(&base)?;
    Ok(out)
}

fn eval_loss(net: &mut Network, input: &Tensor, target: &Tensor, mode: Mode) -> Result<f64> {
    let cache = net.forward_frozen(input, mode)?;
    Ok(mse_loss(&cache.output, target)?.0)
}

/// Max relative disagreement between analytic and central-difference
/// gradients over all parameters.
pub fn finite_diff_check(
    net: &mut Network,
    input: &Tensor,
    target: &Tensor,
    mode: Mode,
) -> Result<f64> {
    let analytic = analytic_grads(net, input, target, mode)?;
    let numeric = numeric_grads(net, input, target, mode, 1e-5)?;
    Ok(max_relative_error(&analytic, &numeric))
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}
