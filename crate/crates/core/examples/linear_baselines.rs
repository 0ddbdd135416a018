//! Closed-form linear estimators vs Monte-Carlo simulation.
//!
//! Runs the unquantized LMMSE and the Bussgang-linearized BLMMSE (1-bit and
//! 2-bit) over an SNR grid with a DFT pilot and prints per-entry MSE next to
//! the analytic LMMSE prediction 1/(1 + rho tau / N0). The quantized curves
//! flatten at high SNR (the MSE floor); the unquantized curve keeps falling.
//!
//! Run with: cargo run --example linear_baselines

use qmimo::harness::{run_mse_sweep, ExperimentConfig, Scheme};
use qmimo::quantizer::Resolution;

fn main() -> qmimo::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.system.m = 4;
    cfg.system.k = 2;
    cfg.system.tau = 8;
    cfg.system.snr_db_list = vec![-10.0, 0.0, 10.0, 20.0, 30.0];
    cfg.dft_columns = vec![0, 1];
    cfg.schemes = vec![Scheme::LmmseUnquantized, Scheme::BlmmseDft];
    cfg.resolutions = vec![Resolution::OneBit, Resolution::TwoBit];
    cfg.trials = 10_000;
    cfg.seed = 1;

    let records = run_mse_sweep(&cfg, None)?;
    println!(
        "{:>7} {:>6} {:>12} {:>12} {:>12}",
        "snr_db", "bits", "mse", "se", "lmmse pred"
    );
    for rec in &records {
        let rho = cfg.system.rho(rec.snr_db);
        let pred = 1.0 / (1.0 + rho * cfg.system.tau as f64 / cfg.system.n0);
        println!(
            "{:>7} {:>6} {:>12.5e} {:>12.2e} {:>12.5e}",
            rec.snr_db,
            qmimo::harness::bits_token(rec.bits),
            rec.mse,
            rec.std_error,
            pred
        );
    }
    Ok(())
}
