//! Seeded Monte-Carlo MSE sweep over (scheme, resolution, SNR) cells.
//!
//! Each cell owns an RNG stream derived from a stable label, so the sweep is
//! reproducible cell by cell and insensitive to execution order. The per-entry
//! MSE metric is ||h - h_hat||^2 / (MK), averaged over `trials` independent
//! channel and noise draws; the sample standard error is recorded alongside.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{complex_unstack, real_stack, vectorize, ChannelModel};
use crate::error::{Error, Result};
use crate::estimators::{
    approx_cov_r, blmmse_general, blmmse_orthogonal, lmmse_estimate,
    one_bit_blmmse_weights, NoiseModel,
};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::tensor::Tensor;
use crate::nn::Network;
use crate::pilot::{dense_effective, dft_pilot, effective_apply, pilot_from_stacked, PilotMatrix};
use crate::quantizer::{input_sigma, quantize, QuantizerSpec, Resolution};
use crate::regressor::estimate;
use crate::rng::{complex_normal, stream};

use super::config::{
    bits_token, channel_token, checkpoint_filename, parse_bits_token, parse_channel_token,
    ExperimentConfig, OneBitScaling, Scheme,
};

pub const RESULTS_HEADER: &str = "snr_db,bits,scheme,channel,tau,m,k,trials,mse,seed";
pub const RESULTS_SE_HEADER: &str = "snr_db,bits,scheme,channel,tau,m,k,trials,mse,se,seed";

/// One Monte-Carlo measurement cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub snr_db: f64,
    pub bits: Option<Resolution>,
    pub scheme: Scheme,
    pub channel: crate::channel::ChannelKind,
    pub tau: usize,
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub mse: f64,
    /// Monte-Carlo standard error; zero when reconstructed from the master
    /// CSV, which does not carry it.
    pub std_error: f64,
    pub seed: u64,
}

/// ||h - h_hat||^2 / (MK); the per-entry complex MSE used throughout.
pub fn mse_per_entry(h: &[Complex64], h_hat: &[Complex64]) -> Result<f64> {
    if h.len() != h_hat.len() {
        return Err(Error::Dimension(format!(
            "length mismatch: {} vs {}",
            h.len(),
            h_hat.len()
        )));
    }
    let sum: f64 = h.iter().zip(h_hat).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(sum / h.len() as f64)
}

enum CellEstimator {
    Lmmse {
        c_h: DMatrix<Complex64>,
    },
    BussgangOrthogonal {
        spec: QuantizerSpec,
    },
    BussgangGeneral {
        spec: QuantizerSpec,
        c_h: DMatrix<Complex64>,
        c_r: DMatrix<Complex64>,
    },
    OneBitRaw {
        weights: DMatrix<Complex64>,
    },
    Dnn {
        spec: QuantizerSpec,
        net: Network,
    },
}

struct Cell {
    pilot: PilotMatrix,
    estimator: CellEstimator,
}

fn load_cell_checkpoint(
    ckpt_dir: Option<&Path>,
    prefix: &str,
    cfg: &ExperimentConfig,
    resolution: Resolution,
    snr_db: f64,
    rho: f64,
) -> Result<Checkpoint> {
    let cell = format!(
        "scheme={prefix} bits={} snr_db={snr_db} channel={}",
        bits_token(Some(resolution)),
        channel_token(cfg.channel)
    );
    let dir = ckpt_dir.ok_or_else(|| {
        Error::MissingCheckpoint(format!("cell {cell}: no checkpoint directory given"))
    })?;
    let path = dir.join(checkpoint_filename(prefix, cfg.channel, Some(resolution), snr_db));
    if !path.exists() {
        return Err(Error::MissingCheckpoint(format!(
            "cell {cell}: expected checkpoint at {}",
            path.display()
        )));
    }
    let ck = Checkpoint::load(&path)?;
    let meta = &ck.meta;
    let sys = &cfg.system;
    if meta.tau != sys.tau
        || meta.m != sys.m
        || meta.k != sys.k
        || meta.channel != cfg.channel
        || meta.resolution != Some(resolution)
        || (meta.rho - rho).abs() > 1e-9 * rho.max(1.0)
    {
        return Err(Error::Checkpoint(format!(
            "cell {cell}: checkpoint {} metadata does not match the sweep configuration",
            path.display()
        )));
    }
    Ok(ck)
}

fn build_cell(
    cfg: &ExperimentConfig,
    channel: &ChannelModel,
    base_pilot: &PilotMatrix,
    scheme: Scheme,
    bits: Option<Resolution>,
    snr_db: f64,
    ckpt_dir: Option<&Path>,
) -> Result<Cell> {
    let sys = &cfg.system;
    let (rho, n0) = (sys.rho(snr_db), sys.n0);
    let estimator = match scheme {
        Scheme::LmmseUnquantized => CellEstimator::Lmmse { c_h: channel.covariance() },
        Scheme::BlmmseDft => {
            let resolution = bits.expect("quantized scheme requires a resolution");
            let spec = QuantizerSpec::new(resolution, input_sigma(sys.k, rho, n0)?)?;
            if resolution == Resolution::OneBit && cfg.one_bit_scaling == OneBitScaling::RawCodes
            {
                let weights = one_bit_blmmse_weights(base_pilot, rho, n0, sys.m)?;
                CellEstimator::OneBitRaw { weights }
            } else if base_pilot.is_orthogonal() {
                CellEstimator::BussgangOrthogonal { spec }
            } else {
                let phi_bar = dense_effective(base_pilot, rho, sys.m);
                let n = sys.tau * sys.m;
                let c_y = &phi_bar * phi_bar.adjoint()
                    + DMatrix::identity(n, n) * Complex64::from(n0);
                let c_r = approx_cov_r(&c_y, spec.eta);
                CellEstimator::BussgangGeneral { spec, c_h: channel.covariance(), c_r }
            }
        }
        Scheme::DnnDft | Scheme::DnnLearnedPilot => {
            let resolution = bits.expect("quantized scheme requires a resolution");
            let prefix = if scheme == Scheme::DnnDft { "dnn" } else { "ae" };
            let ck = load_cell_checkpoint(ckpt_dir, prefix, cfg, resolution, snr_db, rho)?;
            let spec = QuantizerSpec::new(resolution, input_sigma(sys.k, rho, n0)?)?;
            if scheme == Scheme::DnnLearnedPilot {
                let pilot_param = ck.pilot_param.as_ref().ok_or_else(|| {
                    Error::Checkpoint("learned-pilot checkpoint lacks a pilot block".into())
                })?;
                let pilot = pilot_from_stacked(pilot_param)?;
                return Ok(Cell { pilot, estimator: CellEstimator::Dnn { spec, net: ck.network } });
            }
            CellEstimator::Dnn { spec, net: ck.network }
        }
    };
    Ok(Cell { pilot: base_pilot.clone(), estimator })
}

fn run_cell(
    cfg: &ExperimentConfig,
    channel: &ChannelModel,
    base_pilot: &PilotMatrix,
    scheme: Scheme,
    bits: Option<Resolution>,
    snr_db: f64,
    ckpt_dir: Option<&Path>,
) -> Result<ResultRecord> {
    let sys = &cfg.system;
    let (rho, n0) = (sys.rho(snr_db), sys.n0);
    let mut cell = build_cell(cfg, channel, base_pilot, scheme, bits, snr_db, ckpt_dir)?;
    let label = format!("sweep/{}/{}/{}", scheme.token(), bits_token(bits), snr_db);
    let mut rng = stream(cfg.seed, &label, 0);

    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..cfg.trials {
        let h = channel.sample(&mut rng);
        let hv = vectorize(&h);
        let mut y = effective_apply(&cell.pilot, rho, &hv, sys.m)?;
        for v in y.iter_mut() {
            *v += complex_normal(&mut rng, n0);
        }
        let est = match &mut cell.estimator {
            CellEstimator::Lmmse { c_h } => {
                lmmse_estimate(&y, &cell.pilot, rho, c_h, &NoiseModel::White { n0 }, sys.m)?
                    .estimate
            }
            CellEstimator::BussgangOrthogonal { spec } => {
                let r = quantize_levels(&y, spec)?;
                blmmse_orthogonal(&r, &cell.pilot, rho, n0, spec.eta, sys.m)?
            }
            CellEstimator::BussgangGeneral { spec, c_h, c_r } => {
                let r = quantize_levels(&y, spec)?;
                blmmse_general(&r, &cell.pilot, rho, c_h, c_r, spec.eta, sys.m)?.estimate
            }
            CellEstimator::OneBitRaw { weights } => {
                let codes: Vec<Complex64> = y
                    .iter()
                    .map(|z| Complex64::new(sign(z.re), sign(z.im)))
                    .collect();
                (&*weights * nalgebra::DVector::from_vec(codes)).as_slice().to_vec()
            }
            CellEstimator::Dnn { spec, net } => {
                let y_re = real_stack(&y);
                let (_, codes) = quantize(&y_re, spec)?;
                let input = Tensor::from_vec(
                    1,
                    codes.len(),
                    codes.into_iter().map(|c| spec.optimal_level(c) / spec.sigma).collect(),
                )?;
                let out = estimate(net, &input)?;
                complex_unstack(&out.data)?
            }
        };
        let e = mse_per_entry(&hv, &est)?;
        sum += e;
        sumsq += e * e;
    }
    let n = cfg.trials as f64;
    let mse = sum / n;
    let var = if cfg.trials > 1 { (sumsq - n * mse * mse) / (n - 1.0) } else { 0.0 };
    Ok(ResultRecord {
        snr_db,
        bits,
        scheme,
        channel: cfg.channel,
        tau: sys.tau,
        m: sys.m,
        k: sys.k,
        trials: cfg.trials,
        mse,
        std_error: (var.max(0.0) / n).sqrt(),
        seed: cfg.seed,
    })
}

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Quantize a complex observation to the optimal reconstruction levels used
/// by the Bussgang-linearized estimators.
fn quantize_levels(y: &[Complex64], spec: &QuantizerSpec) -> Result<Vec<Complex64>> {
    let y_re = real_stack(y);
    let (_, codes) = quantize(&y_re, spec)?;
    let levels: Vec<f64> = codes.into_iter().map(|c| spec.optimal_level(c)).collect();
    complex_unstack(&levels)
}

/// Run every (scheme, bits, SNR) cell in deterministic order: schemes as
/// configured, resolutions as configured, SNR ascending as configured. The
/// unquantized LMMSE scheme produces one `bits = inf` row per SNR.
pub fn run_mse_sweep(cfg: &ExperimentConfig, ckpt_dir: Option<&Path>) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let sys = &cfg.system;
    let channel = ChannelModel::new(cfg.channel, sys.m, sys.k)?;
    let base_pilot = dft_pilot(sys.tau, &cfg.dft_columns)?;
    let mut records = Vec::new();
    for &scheme in &cfg.schemes {
        let bits_list: Vec<Option<Resolution>> = match scheme {
            Scheme::LmmseUnquantized => vec![None],
            _ => cfg.resolutions.iter().map(|r| Some(*r)).collect(),
        };
        for bits in bits_list {
            for &snr_db in &sys.snr_db_list {
                records.push(run_cell(cfg, &channel, &base_pilot, scheme, bits, snr_db, ckpt_dir)?);
            }
        }
    }
    Ok(records)
}

fn record_line(rec: &ResultRecord, with_se: bool) -> String {
    let se = if with_se { format!("{:e},", rec.std_error) } else { String::new() };
    format!(
        "{},{},{},{},{},{},{},{},{:e},{}{}",
        rec.snr_db,
        bits_token(rec.bits),
        rec.scheme.token(),
        channel_token(rec.channel),
        rec.tau,
        rec.m,
        rec.k,
        rec.trials,
        rec.mse,
        se,
        rec.seed
    )
}

/// Master results CSV body with the frozen header.
pub fn records_csv_string(records: &[ResultRecord]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for rec in records {
        s.push_str(&record_line(rec, false));
        s.push('\n');
    }
    s
}

/// Master results CSV with the frozen header.
pub fn write_records_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    std::fs::write(path, records_csv_string(records))?;
    Ok(())
}

/// Companion CSV carrying the Monte-Carlo standard error column.
pub fn write_records_se_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{RESULTS_SE_HEADER}")?;
    for rec in records {
        writeln!(f, "{}", record_line(rec, true))?;
    }
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != RESULTS_HEADER {
        return Err(Error::Config(format!(
            "unexpected results header '{header}' in {}",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Config(format!("line {}: expected 10 fields", i + 2)));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Config(format!("bad number '{s}' on line {}", i + 2)))
        };
        records.push(ResultRecord {
            snr_db: num(f[0])?,
            bits: parse_bits_token(f[1])?,
            scheme: Scheme::parse(f[2])?,
            channel: parse_channel_token(f[3])?,
            tau: num(f[4])? as usize,
            m: num(f[5])? as usize,
            k: num(f[6])? as usize,
            trials: num(f[7])? as usize,
            mse: num(f[8])?,
            std_error: 0.0,
            seed: num(f[9])? as u64,
        });
    }
    Ok(records)
}
