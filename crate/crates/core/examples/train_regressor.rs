//! Train the feed-forward regressor as a nonlinear channel estimator.
//!
//! Small configuration (tau=8, M=2, K=2, 1-bit, 10 dB) so it finishes in
//! about a minute on a laptop core. Prints the loss history and compares the
//! final test MSE against the Bussgang LMMSE baseline on shared test draws.
//!
//! Run with: cargo run --example train_regressor

use qmimo::channel::{ChannelKind, ChannelModel};
use qmimo::harness::{run_mse_sweep, ExperimentConfig, Scheme};
use qmimo::pilot::dft_pilot;
use qmimo::quantizer::{input_sigma, QuantizerSpec, Resolution};
use qmimo::regressor::{build_regressor, train_regressor, RegressorConfig, TrainConfig};
use qmimo::rng::stream;

fn main() -> qmimo::Result<()> {
    let (tau, m, k) = (8usize, 2usize, 2usize);
    let snr_db = 10.0;
    let mut cfg = ExperimentConfig::default();
    cfg.system.m = m;
    cfg.system.k = k;
    cfg.system.tau = tau;
    cfg.system.snr_db_list = vec![snr_db];
    cfg.dft_columns = vec![0, 1];
    cfg.trials = 5_000;
    cfg.seed = 3;

    let rho = cfg.system.rho(snr_db);
    let n0 = cfg.system.n0;
    let channel = ChannelModel::new(ChannelKind::RayleighIid, m, k)?;
    let pilot = dft_pilot(tau, &cfg.dft_columns)?;
    let spec = QuantizerSpec::new(Resolution::OneBit, input_sigma(k, rho, n0)?)?;

    let mut rng = stream(cfg.seed, "example/train-regressor", 0);
    let mut net = build_regressor(RegressorConfig::new(tau, m, k)?, &mut rng);
    let train = TrainConfig {
        train_samples: 20_000,
        val_samples: 4_000,
        max_epochs: 25,
        patience: 5,
        seed: cfg.seed,
        ..TrainConfig::default()
    };
    let outcome = train_regressor(&mut net, &channel, &pilot, rho, n0, Some(&spec), &train)?;
    for rec in &outcome.history {
        println!("epoch {:>3}  train {:.5e}  val {:.5e}", rec.epoch, rec.train_mse, rec.val_mse);
    }
    println!(
        "best val MSE {:.5e} at epoch {}",
        outcome.best_val_mse, outcome.best_epoch
    );

    // baseline at the same cell
    cfg.schemes = vec![Scheme::BlmmseDft];
    cfg.resolutions = vec![Resolution::OneBit];
    let baseline = run_mse_sweep(&cfg, None)?;
    println!(
        "BLMMSE per-entry MSE {:.5e}; regressor per-entry MSE {:.5e}",
        baseline[0].mse,
        2.0 * outcome.best_val_mse // per-entry complex MSE = 2x per-real-dim loss
    );
    Ok(())
}
