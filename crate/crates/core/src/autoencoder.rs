//! Pilot-learning autoencoder: h^R -> Noiseless layer -> Noise layer ->
//! Quantization layer (straight-through) -> Receive layer -> regressor -> h_hat^R.
//!
//! The Noiseless layer's weight matrix is the pilot itself: a trainable real
//! matrix `pilot_param` of shape 2*tau x K holding [Re(Phi); Im(Phi)]. Its
//! forward map equals (sqrt(rho) * Phi^{RI} (x) I_M) h^R where Phi^{RI} is the
//! 2*tau x 2K block matrix [[P, -Q], [Q, P]]; the Kronecker product is never
//! materialized — the multiply runs blockwise in O(tau*M*K). Training is
//! projected gradient: one joint Adam step over pilot and regressor
//! parameters, then projection of the pilot onto its power constraint.

use nalgebra::DMatrix;
use std::io::Write as _;
use std::path::Path;

use crate::channel::{real_stack, vectorize, ChannelModel};
use crate::error::{Error, Result};
use crate::nn::layers::Mode;
use crate::nn::tensor::Tensor;
use crate::nn::{mse_loss, AdamState, ForwardCache, Network, QuantizeNode};
use crate::pilot::{pilot_from_stacked, project_power, real_embedding, PilotMatrix, PowerConstraint};
use crate::regressor::{
    build_regressor, RegressorConfig, TrainConfig, TRAIN_DATA_LABEL, VAL_DATA_LABEL,
};
use crate::rng::{complex_normal, stream};
use rand::Rng;

/// End-to-end autoencoder state: the trainable pilot plus the receive-side
/// regressor and the fixed channel/noise/quantizer context.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    /// 2*tau x K real matrix, rows [Re(Phi); Im(Phi)].
    pub pilot_param: DMatrix<f64>,
    pub net: Network,
    pub m: usize,
    pub rho: f64,
    pub n0: f64,
    pub constraint: PowerConstraint,
    /// `None` turns the quantization layer into a wire (linear ablation).
    pub quantize: Option<QuantizeNode>,
}

impl AutoencoderModel {
    /// Initialize from a feasible pilot (typically DFT columns); the
    /// regressor weights come from `rng`.
    pub fn new<R: Rng + ?Sized>(
        init: &PilotMatrix,
        m: usize,
        rho: f64,
        n0: f64,
        constraint: PowerConstraint,
        quantize: Option<QuantizeNode>,
        rng: &mut R,
    ) -> Result<Self> {
        if !crate::pilot::validate_power(init, constraint) {
            return Err(Error::Precondition("initial pilot violates power constraint".into()));
        }
        let cfg = RegressorConfig::new(init.tau(), m, init.k())?;
        Ok(Self {
            pilot_param: real_embedding(init).phi_re,
            net: build_regressor(cfg, rng),
            m,
            rho,
            n0,
            constraint,
            quantize,
        })
    }

    pub fn tau(&self) -> usize {
        self.pilot_param.nrows() / 2
    }

    pub fn k(&self) -> usize {
        self.pilot_param.ncols()
    }
}

/// Reassemble the complex pilot from the trainable halves.
pub fn extract_pilot(model: &AutoencoderModel) -> Result<PilotMatrix> {
    pilot_from_stacked(&model.pilot_param)
}

/// y0^R = (sqrt(rho) Phi^{RI} (x) I_M) h^R, batched row-wise. With P = Re(Phi)
/// and Q = Im(Phi), the real half of slot t, antenna i is
/// sqrt(rho) * sum_k (P[t,k] a[k,i] - Q[t,k] b[k,i]) and the imaginary half is
/// sqrt(rho) * sum_k (Q[t,k] a[k,i] + P[t,k] b[k,i]), where h^R = [a; b].
pub fn noiseless_forward(
    pilot_param: &DMatrix<f64>,
    rho: f64,
    m: usize,
    h_re: &Tensor,
) -> Result<Tensor> {
    let tau = pilot_param.nrows() / 2;
    let k = pilot_param.ncols();
    if h_re.cols != 2 * m * k {
        return Err(Error::Dimension(format!(
            "h^R width {} != 2MK = {}",
            h_re.cols,
            2 * m * k
        )));
    }
    let s = rho.sqrt();
    let mut y = Tensor::zeros(h_re.rows, 2 * tau * m);
    for row in 0..h_re.rows {
        let h = h_re.row(row);
        let (a, b) = h.split_at(m * k);
        let out = y.row_mut(row);
        let (yre, yim) = out.split_at_mut(tau * m);
        for t in 0..tau {
            for kk in 0..k {
                let p = s * pilot_param[(t, kk)];
                let q = s * pilot_param[(tau + t, kk)];
                for i in 0..m {
                    let (ai, bi) = (a[kk * m + i], b[kk * m + i]);
                    yre[t * m + i] += p * ai - q * bi;
                    yim[t * m + i] += q * ai + p * bi;
                }
            }
        }
    }
    Ok(y)
}

/// Exact adjoints of [`noiseless_forward`] for both inputs; the pilot
/// gradient is accumulated over the batch.
pub fn noiseless_backward(
    pilot_param: &DMatrix<f64>,
    rho: f64,
    m: usize,
    h_re: &Tensor,
    grad_y: &Tensor,
) -> (Tensor, DMatrix<f64>) {
    let tau = pilot_param.nrows() / 2;
    let k = pilot_param.ncols();
    let s = rho.sqrt();
    let mut grad_h = Tensor::zeros(h_re.rows, h_re.cols);
    let mut grad_pilot = DMatrix::zeros(2 * tau, k);
    for row in 0..h_re.rows {
        let h = h_re.row(row);
        let (a, b) = h.split_at(m * k);
        let g = grad_y.row(row);
        let (gre, gim) = g.split_at(tau * m);
        let gh = grad_h.row_mut(row);
        let (ga, gb) = gh.split_at_mut(m * k);
        for t in 0..tau {
            for kk in 0..k {
                let p = s * pilot_param[(t, kk)];
                let q = s * pilot_param[(tau + t, kk)];
                let mut dp = 0.0;
                let mut dq = 0.0;
                for i in 0..m {
                    let (ai, bi) = (a[kk * m + i], b[kk * m + i]);
                    let (gr, gi) = (gre[t * m + i], gim[t * m + i]);
                    ga[kk * m + i] += p * gr + q * gi;
                    gb[kk * m + i] += -q * gr + p * gi;
                    dp += gr * ai + gi * bi;
                    dq += -gr * bi + gi * ai;
                }
                grad_pilot[(t, kk)] += s * dp;
                grad_pilot[(tau + t, kk)] += s * dq;
            }
        }
    }
    (grad_h, grad_pilot)
}

/// Additive noise; gradient passes through unchanged.
pub fn noise_forward(y0: &Tensor, noise: Option<&Tensor>) -> Result<Tensor> {
    match noise {
        None => Ok(y0.clone()),
        Some(n) => {
            if n.rows != y0.rows || n.cols != y0.cols {
                return Err(Error::Dimension("noise shape mismatch".into()));
            }
            let mut y = y0.clone();
            y.add_assign(n)?;
            Ok(y)
        }
    }
}

/// Intermediate activations of one end-to-end pass.
pub struct AeCache {
    pub h: Tensor,
    /// Input to the quantization layer (post-noise).
    pub y: Tensor,
    pub net_cache: ForwardCache,
}

/// End-to-end forward: noiseless -> noise -> quantize -> receive (identity
/// hand-off into the regressor). Noise is supplied explicitly so callers
/// control the RNG draw order.
pub fn ae_forward(
    model: &mut AutoencoderModel,
    h_re: &Tensor,
    noise: Option<&Tensor>,
    mode: Mode,
) -> Result<AeCache> {
    let y0 = noiseless_forward(&model.pilot_param, model.rho, model.m, h_re)?;
    let y = noise_forward(&y0, noise)?;
    let r = match &model.quantize {
        Some(node) => node.forward(&y)?,
        None => y.clone(),
    };
    let net_cache = model.net.forward(&r, mode)?;
    Ok(AeCache { h: h_re.clone(), y, net_cache })
}

/// End-to-end backward from the loss gradient at the regressor output down to
/// the pilot parameter. Returns (pilot gradient, flat regressor gradient).
pub fn ae_backward(
    model: &AutoencoderModel,
    cache: &AeCache,
    grad_out: &Tensor,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (grad_r, layer_grads) = model.net.backward(&cache.net_cache, grad_out)?;
    let grad_y = match &model.quantize {
        Some(node) => node.backward(&cache.y, &grad_r),
        None => grad_r,
    };
    // noise layer: identity gradient
    let (_, grad_pilot) = noiseless_backward(&model.pilot_param, model.rho, model.m, &cache.h, &grad_y);
    Ok((grad_pilot, model.net.grads_flat(&layer_grads)))
}

/// Draw `count` samples in the same per-sample order as regressor training:
/// channel first, then the tau*M noise values for that sample. Returns the
/// real-stacked channel batch and noise batch (noise `None` when N0 = 0).
pub fn generate_ae_batch<R: Rng + ?Sized>(
    model: &ChannelModel,
    tau: usize,
    n0: f64,
    count: usize,
    rng: &mut R,
) -> Result<(Tensor, Option<Tensor>)> {
    let mut h = Tensor::zeros(count, 2 * model.m * model.k);
    let mut noise = if n0 > 0.0 { Some(Tensor::zeros(count, 2 * tau * model.m)) } else { None };
    for row in 0..count {
        let hm = model.sample(rng);
        h.row_mut(row).copy_from_slice(&real_stack(&vectorize(&hm)));
        if let Some(n) = noise.as_mut() {
            let draws: Vec<_> = (0..tau * model.m).map(|_| complex_normal(rng, n0)).collect();
            n.row_mut(row).copy_from_slice(&real_stack(&draws));
        }
    }
    Ok((h, noise))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeEpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Learned pilot column norms after this epoch (feasible iff <= sqrt(tau)
    /// under the per-column constraint).
    pub column_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeTrainOutcome {
    pub history: Vec<AeEpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

fn column_norms(pilot_param: &DMatrix<f64>) -> Vec<f64> {
    (0..pilot_param.ncols()).map(|k| pilot_param.column(k).norm()).collect()
}

fn project_pilot(model: &mut AutoencoderModel) -> Result<()> {
    let pilot = extract_pilot(model)?;
    let projected = project_power(&pilot, model.constraint);
    model.pilot_param = real_embedding(&projected).phi_re;
    Ok(())
}

fn ae_eval_mse(
    model: &mut AutoencoderModel,
    h: &Tensor,
    noise: Option<&Tensor>,
    batch_size: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut start = 0;
    while start < h.rows {
        let end = (start + batch_size).min(h.rows);
        let hb = slice_rows(h, start, end);
        let nb = noise.map(|n| slice_rows(n, start, end));
        let cache = ae_forward(model, &hb, nb.as_ref(), Mode::Eval)?;
        let (loss, _) = mse_loss(&cache.net_cache.output, &hb)?;
        total += loss * (end - start) as f64;
        start = end;
    }
    Ok(total / h.rows as f64)
}

fn slice_rows(x: &Tensor, start: usize, end: usize) -> Tensor {
    Tensor {
        rows: end - start,
        cols: x.cols,
        data: x.data[start * x.cols..end * x.cols].to_vec(),
    }
}

/// Projected-gradient training of pilot and regressor. `pilot_learning_rate`
/// may differ from the network rate; zero freezes the pilot entirely (no Adam
/// state is touched), which reduces the run to plain regressor training on
/// the frozen pilot. After every optimizer step the pilot is projected onto
/// its power constraint. On return the model holds the best-validation
/// checkpoint.
pub fn train_autoencoder(
    model: &mut AutoencoderModel,
    channel: &ChannelModel,
    config: &TrainConfig,
    pilot_learning_rate: f64,
) -> Result<AeTrainOutcome> {
    config.validate()?;
    if pilot_learning_rate < 0.0 {
        return Err(Error::Config("pilot learning rate must be >= 0".into()));
    }
    let tau = model.tau();
    let mut val_rng = stream(config.seed, VAL_DATA_LABEL, 0);
    let (val_h, val_noise) =
        generate_ae_batch(channel, tau, model.n0, config.val_samples, &mut val_rng)?;

    let mut adam_net = AdamState::new(model.net.param_count(), config.learning_rate);
    let mut adam_pilot = AdamState::new(model.pilot_param.len(), pilot_learning_rate);
    let mut net_params = model.net.params_flat();
    let batches = (config.train_samples / config.batch_size).max(1);

    let mut history = Vec::new();
    let mut best: Option<AutoencoderModel> = None;
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        let mut data_rng = stream(config.seed, TRAIN_DATA_LABEL, epoch as u64);
        let mut epoch_loss = 0.0;
        for _ in 0..batches {
            let (h, noise) =
                generate_ae_batch(channel, tau, model.n0, config.batch_size, &mut data_rng)?;
            let cache = ae_forward(model, &h, noise.as_ref(), Mode::Train)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            let (loss, grad) = mse_loss(&cache.net_cache.output, &h)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "training diverged at epoch {epoch}: loss = {loss}"
                )));
            }
            let (grad_pilot, grad_net) = ae_backward(model, &cache, &grad)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            adam_net.step(&mut net_params, &grad_net)?;
            model.net.set_params_flat(&net_params)?;
            if pilot_learning_rate > 0.0 {
                let mut p: Vec<f64> = model.pilot_param.as_slice().to_vec();
                adam_pilot.step(&mut p, grad_pilot.as_slice())?;
                model.pilot_param.as_mut_slice().copy_from_slice(&p);
                project_pilot(model)?;
            }
            epoch_loss += loss;
        }
        let train_mse = epoch_loss / batches as f64;
        let val_mse = ae_eval_mse(model, &val_h, val_noise.as_ref(), config.batch_size)
            .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
        history.push(AeEpochRecord {
            epoch,
            train_mse,
            val_mse,
            column_norms: column_norms(&model.pilot_param),
        });

        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best = Some(model.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
        adam_net.lr *= config.lr_decay;
        adam_pilot.lr *= config.lr_decay;
    }

    if let Some(b) = best {
        *model = b;
    }
    Ok(AeTrainOutcome { history, best_epoch, best_val_mse: best_val })
}

/// Training log with per-epoch losses and learned pilot column norms.
pub fn write_ae_history_csv(history: &[AeEpochRecord], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let k = history.first().map_or(0, |r| r.column_norms.len());
    let norm_cols: String = (0..k).map(|i| format!(",col_norm_{i}")).collect();
    writeln!(f, "epoch,train_mse,val_mse{norm_cols}")?;
    for rec in history {
        let norms: String = rec.column_norms.iter().map(|n| format!(",{n:e}")).collect();
        writeln!(f, "{},{:e},{:e}{}", rec.epoch, rec.train_mse, rec.val_mse, norms)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelKind;
    use crate::nn::gradcheck::max_relative_error;
    use crate::nn::{QuantizeForward, SteKind};
    use crate::pilot::{dft_pilot, dense_effective, effective_apply, validate_power};
    use crate::quantizer::{input_sigma, QuantizerSpec, Resolution};
    use crate::regressor::train_regressor;
    use crate::rng::standard_normal;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn randn_tensor(rows: usize, cols: usize, seed: u64) -> Tensor {
        let mut rng = stream(seed, "ae-test", 0);
        Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| standard_normal(&mut rng)).collect())
            .unwrap()
    }

    #[test]
    fn scalar_identity_and_j_pilot() {
        // Phi = 1: y0^R = (a, b)
        let p = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let h = Tensor::from_vec(1, 2, vec![0.3, -0.7]).unwrap();
        let y = noiseless_forward(&p, 1.0, 1, &h).unwrap();
        assert_eq!(y.data, vec![0.3, -0.7]);
        // Phi = j: y0^R = (-b, a)
        let p = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let y = noiseless_forward(&p, 1.0, 1, &h).unwrap();
        assert_eq!(y.data, vec![0.7, 0.3]);
    }

    #[test]
    fn matches_complex_effective_apply() {
        let (tau, k, m) = (3usize, 2usize, 2usize);
        let mut rng = stream(1, "ae-test", 1);
        let phi = DMatrix::from_fn(tau, k, |_, _| complex_normal(&mut rng, 1.0));
        let pilot = PilotMatrix::new(phi).unwrap();
        let p = real_embedding(&pilot).phi_re;
        let rho = 2.5;
        for _ in 0..5 {
            let h: Vec<Complex64> = (0..m * k).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let h_re = Tensor::from_vec(1, 2 * m * k, real_stack(&h)).unwrap();
            let y = noiseless_forward(&p, rho, m, &h_re).unwrap();
            let oracle = real_stack(&effective_apply(&pilot, rho, &h, m).unwrap());
            for (a, b) in y.data.iter().zip(&oracle) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn matches_dense_kronecker() {
        let (tau, k, m) = (2usize, 2usize, 3usize);
        let mut rng = stream(2, "ae-test", 1);
        let phi = DMatrix::from_fn(tau, k, |_, _| complex_normal(&mut rng, 1.0));
        let pilot = PilotMatrix::new(phi).unwrap();
        let p = real_embedding(&pilot).phi_re;
        let dense = dense_effective(&pilot, 1.7, m);
        let h: Vec<Complex64> = (0..m * k).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let h_re = Tensor::from_vec(1, 2 * m * k, real_stack(&h)).unwrap();
        let y = noiseless_forward(&p, 1.7, m, &h_re).unwrap();
        let oracle = real_stack((&dense * DVector::from_vec(h.clone())).as_slice());
        for (a, b) in y.data.iter().zip(&oracle) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn noiseless_adjoints_match_finite_differences() {
        let (tau, k, m) = (2usize, 2usize, 2usize);
        let mut rng = stream(3, "ae-test", 1);
        let p = DMatrix::from_fn(2 * tau, k, |_, _| standard_normal(&mut rng));
        let h = randn_tensor(3, 2 * m * k, 4);
        let g = randn_tensor(3, 2 * tau * m, 5);
        let (gh, gp) = noiseless_backward(&p, 1.3, m, &h, &g);
        // loss surrogate L = <g, forward(.)>; finite differences on each input
        let eps = 1e-6;
        let dot = |y: &Tensor| -> f64 { y.data.iter().zip(&g.data).map(|(a, b)| a * b).sum() };
        for idx in 0..h.data.len() {
            let mut hp = h.clone();
            hp.data[idx] += eps;
            let mut hm = h.clone();
            hm.data[idx] -= eps;
            let num = (dot(&noiseless_forward(&p, 1.3, m, &hp).unwrap())
                - dot(&noiseless_forward(&p, 1.3, m, &hm).unwrap()))
                / (2.0 * eps);
            assert_relative_eq!(gh.data[idx], num, epsilon = 1e-6, max_relative = 1e-6);
        }
        for idx in 0..p.len() {
            let mut pp = p.clone();
            pp.as_mut_slice()[idx] += eps;
            let mut pm = p.clone();
            pm.as_mut_slice()[idx] -= eps;
            let num = (dot(&noiseless_forward(&pp, 1.3, m, &h).unwrap())
                - dot(&noiseless_forward(&pm, 1.3, m, &h).unwrap()))
                / (2.0 * eps);
            assert_relative_eq!(gp.as_slice()[idx], num, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn noise_layer_variance_and_identity() {
        let y0 = randn_tensor(2, 4, 6);
        assert_eq!(noise_forward(&y0, None).unwrap(), y0);
        // empirical variance of real-stacked CN(0, n0) noise = n0/2 per entry
        let n0 = 0.8;
        let mut rng = stream(7, "ae-test", 1);
        let mut sumsq = 0.0;
        let n = 1_000_000usize;
        for _ in 0..n / 2 {
            let z = complex_normal(&mut rng, n0);
            sumsq += z.re * z.re + z.im * z.im;
        }
        assert_relative_eq!(sumsq / n as f64, n0 / 2.0, max_relative = 0.01);
    }

    fn small_model(quantize: Option<QuantizeNode>, seed: u64) -> AutoencoderModel {
        let pilot = dft_pilot(2, &[0]).unwrap();
        let mut rng = stream(seed, "ae-test-init", 0);
        AutoencoderModel::new(&pilot, 1, 1.0, 1.0, PowerConstraint::PerColumn, quantize, &mut rng)
            .unwrap()
    }

    #[test]
    fn level_alphabets() {
        let sigma = input_sigma(1, 1.0, 1.0).unwrap();
        for res in [Resolution::OneBit, Resolution::Ternary] {
            let spec = QuantizerSpec::new(res, sigma).unwrap();
            let l = spec.optimal_level(1);
            let allowed = match res {
                Resolution::OneBit => vec![-l, l],
                _ => vec![-l, 0.0, l],
            };
            let node = QuantizeNode {
                spec,
                forward: QuantizeForward::Levels,
                ste: SteKind::Clipped,
            };
            let mut model = small_model(Some(node), 1);
            let h = randn_tensor(16, 2, 8);
            let noise = randn_tensor(16, 4, 9);
            let cache = ae_forward(&mut model, &h, Some(&noise), Mode::Eval).unwrap();
            let r = &cache.net_cache;
            // recompute the codes layerwise to inspect them
            let y = noise_forward(
                &noiseless_forward(&model.pilot_param, model.rho, model.m, &h).unwrap(),
                Some(&noise),
            )
            .unwrap();
            let codes = model.quantize.as_ref().unwrap().forward(&y).unwrap();
            assert!(codes.data.iter().all(|c| allowed.contains(c)));
            assert_eq!(r.output.cols, 2);
        }
    }

    #[test]
    fn pilot_gradcheck_with_surrogate_quantizer() {
        // clipped-identity surrogate: STE gradient is exact, so finite
        // differences on the pilot must agree
        let sigma = input_sigma(1, 1.0, 1.0).unwrap();
        let node = QuantizeNode {
            spec: QuantizerSpec::new(Resolution::TwoBit, sigma).unwrap(),
            forward: QuantizeForward::ClippedIdentity,
            ste: SteKind::Clipped,
        };
        let mut model = small_model(Some(node), 2);
        let h = randn_tensor(4, 2, 10);
        let noise = randn_tensor(4, 4, 11);
        let loss_at = |model: &mut AutoencoderModel| -> f64 {
            let cache = ae_forward(model, &h, Some(&noise), Mode::Eval).unwrap();
            mse_loss(&cache.net_cache.output, &h).unwrap().0
        };
        let cache = ae_forward(&mut model, &h, Some(&noise), Mode::Eval).unwrap();
        let (_, grad) = mse_loss(&cache.net_cache.output, &h).unwrap();
        let (grad_pilot, _) = ae_backward(&model, &cache, &grad).unwrap();

        let eps = 1e-5;
        let mut numeric = Vec::new();
        for idx in 0..model.pilot_param.len() {
            let orig = model.pilot_param.as_slice()[idx];
            model.pilot_param.as_mut_slice()[idx] = orig + eps;
            let lp = loss_at(&mut model);
            model.pilot_param.as_mut_slice()[idx] = orig - eps;
            let lm = loss_at(&mut model);
            model.pilot_param.as_mut_slice()[idx] = orig;
            numeric.push((lp - lm) / (2.0 * eps));
        }
        let err = max_relative_error(grad_pilot.as_slice(), &numeric);
        assert!(err < 1e-4, "pilot grad rel err {err}");
    }

    #[test]
    fn frozen_pilot_training_equals_regressor_training() {
        let (tau, m, k) = (2usize, 1usize, 2usize);
        let channel = ChannelModel::new(ChannelKind::RayleighIid, m, k).unwrap();
        let pilot = dft_pilot(tau, &[0, 1]).unwrap();
        let (rho, n0) = (1.0, 1.0);
        let sigma = input_sigma(k, rho, n0).unwrap();
        let spec = QuantizerSpec::new(Resolution::OneBit, sigma).unwrap();
        let config = TrainConfig {
            train_samples: 2_000,
            val_samples: 1_000,
            batch_size: 200,
            max_epochs: 4,
            patience: 4,
            seed: 42,
            ..TrainConfig::default()
        };

        let mut net = {
            let mut rng = stream(9, "ae-test-init", 0);
            build_regressor(RegressorConfig::new(tau, m, k).unwrap(), &mut rng)
        };
        let reg =
            train_regressor(&mut net, &channel, &pilot, rho, n0, Some(&spec), &config).unwrap();

        let node = QuantizeNode {
            spec,
            forward: QuantizeForward::Levels,
            ste: SteKind::Clipped,
        };
        let mut rng = stream(9, "ae-test-init", 0);
        let mut model = AutoencoderModel::new(
            &pilot,
            m,
            rho,
            n0,
            PowerConstraint::PerColumn,
            Some(node),
            &mut rng,
        )
        .unwrap();
        let before = model.pilot_param.clone();
        let ae = train_autoencoder(&mut model, &channel, &config, 0.0).unwrap();

        assert_eq!(model.pilot_param, before, "frozen pilot must stay bit-identical");
        assert_eq!(reg.history.len(), ae.history.len());
        for (r, a) in reg.history.iter().zip(&ae.history) {
            assert_eq!(r.train_mse, a.train_mse, "epoch {}", r.epoch);
            assert_eq!(r.val_mse, a.val_mse, "epoch {}", r.epoch);
        }
        assert_eq!(model.net.params_flat(), net.params_flat());
    }

    #[test]
    fn projection_keeps_pilot_feasible_during_training() {
        let (tau, m, k) = (2usize, 1usize, 1usize);
        let channel = ChannelModel::new(ChannelKind::RayleighIid, m, k).unwrap();
        let pilot = dft_pilot(tau, &[1]).unwrap();
        let sigma = input_sigma(k, 1.0, 1.0).unwrap();
        let node = QuantizeNode {
            spec: QuantizerSpec::new(Resolution::OneBit, sigma).unwrap(),
            forward: QuantizeForward::Levels,
            ste: SteKind::Clipped,
        };
        let mut rng = stream(10, "ae-test-init", 0);
        let mut model =
            AutoencoderModel::new(&pilot, m, 1.0, 1.0, PowerConstraint::PerColumn, Some(node), &mut rng)
                .unwrap();
        let config = TrainConfig {
            train_samples: 1_000,
            val_samples: 500,
            batch_size: 100,
            max_epochs: 5,
            patience: 5,
            seed: 3,
            ..TrainConfig::default()
        };
        let outcome = train_autoencoder(&mut model, &channel, &config, 1e-2).unwrap();
        let learned = extract_pilot(&model).unwrap();
        assert!(validate_power(&learned, PowerConstraint::PerColumn));
        for rec in &outcome.history {
            for n in &rec.column_norms {
                assert!(*n <= (tau as f64).sqrt() + 1e-6);
            }
        }
    }

    #[test]
    fn unquantized_learned_pilot_beats_weak_fixed_pilot() {
        // M=K=1, tau=2, sum power, no quantizer. The fixed pilot [1, 0]
        // wastes half the budget; training can reach the full-power optimum
        // phi^H phi = 2, whose LMMSE MSE is 1/(1 + 2 rho / N0).
        let (tau, m, k) = (2usize, 1usize, 1usize);
        let channel = ChannelModel::new(ChannelKind::RayleighIid, m, k).unwrap();
        let weak = PilotMatrix::new(DMatrix::from_column_slice(
            tau,
            k,
            &[Complex64::from(1.0), Complex64::ZERO],
        ))
        .unwrap();
        let (rho, n0) = (4.0, 1.0);
        // weak-pilot MMSE: per-entry complex MSE = 1/(1 + rho/N0)
        let weak_bound = 1.0 / (1.0 + rho / n0);
        let opt_bound = 1.0 / (1.0 + 2.0 * rho / n0);

        let mut rng = stream(11, "ae-test-init", 0);
        let mut model =
            AutoencoderModel::new(&weak, m, rho, n0, PowerConstraint::SumPower, None, &mut rng)
                .unwrap();
        let config = TrainConfig {
            train_samples: 16_000,
            val_samples: 3_000,
            batch_size: 128,
            max_epochs: 40,
            patience: 8,
            seed: 13,
            ..TrainConfig::default()
        };
        train_autoencoder(&mut model, &channel, &config, 1e-2).unwrap();
        let learned = extract_pilot(&model).unwrap();
        assert!(validate_power(&learned, PowerConstraint::SumPower));

        // fresh test set; per-entry complex MSE = 2 * real-dim MSE
        let mut test_rng = stream(11, "ae-test-eval", 0);
        let (th, tn) = generate_ae_batch(&channel, tau, n0, 4_000, &mut test_rng).unwrap();
        let mse = 2.0 * ae_eval_mse(&mut model, &th, tn.as_ref(), 256).unwrap();
        assert!(
            mse < weak_bound && mse < 1.15 * opt_bound,
            "learned per-entry MSE {mse}, weak bound {weak_bound}, optimum {opt_bound}"
        );
    }

    #[test]
    fn extract_pilot_round_trip() {
        let pilot = dft_pilot(4, &[0, 2]).unwrap();
        let mut rng = stream(12, "ae-test-init", 0);
        let model = AutoencoderModel::new(
            &pilot,
            2,
            1.0,
            1.0,
            PowerConstraint::PerColumn,
            None,
            &mut rng,
        )
        .unwrap();
        let back = extract_pilot(&model).unwrap();
        assert_eq!(back.phi, pilot.phi);
        assert_eq!(real_embedding(&back).phi_re, model.pilot_param);
        assert!(validate_power(&back, PowerConstraint::PerColumn));
    }

    #[test]
    fn ae_history_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.csv");
        let history = vec![AeEpochRecord {
            epoch: 1,
            train_mse: 0.5,
            val_mse: 0.4,
            column_norms: vec![1.0, 2.0],
        }];
        write_ae_history_csv(&history, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epoch,train_mse,val_mse,col_norm_0,col_norm_1\n"));
    }
}
