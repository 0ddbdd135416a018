//! Joint pilot + estimator learning with the autoencoder.
//!
//! The first layer's weights are the pilot matrix itself; training runs
//! projected gradient (Adam step, then projection onto the per-column power
//! constraint). Starts from a DFT pilot and prints how the pilot column norms
//! and validation loss evolve.
//!
//! Run with: cargo run --example train_autoencoder

use qmimo::autoencoder::{extract_pilot, train_autoencoder, AutoencoderModel};
use qmimo::channel::{ChannelKind, ChannelModel};
use qmimo::nn::{QuantizeForward, QuantizeNode, SteKind};
use qmimo::pilot::{dft_pilot, validate_power, PowerConstraint};
use qmimo::quantizer::{input_sigma, QuantizerSpec, Resolution};
use qmimo::regressor::TrainConfig;
use qmimo::rng::stream;

fn main() -> qmimo::Result<()> {
    let (tau, m, k) = (8usize, 2usize, 2usize);
    let (rho, n0) = (10.0, 1.0);
    let channel = ChannelModel::new(ChannelKind::RayleighIid, m, k)?;
    let init = dft_pilot(tau, &[0, 1])?;
    let node = QuantizeNode {
        spec: QuantizerSpec::new(Resolution::OneBit, input_sigma(k, rho, n0)?)?,
        forward: QuantizeForward::Levels,
        ste: SteKind::Clipped,
    };
    let mut rng = stream(5, "example/train-autoencoder", 0);
    let mut model = AutoencoderModel::new(
        &init,
        m,
        rho,
        n0,
        PowerConstraint::PerColumn,
        Some(node),
        &mut rng,
    )?;
    let train = TrainConfig {
        train_samples: 20_000,
        val_samples: 4_000,
        max_epochs: 25,
        patience: 5,
        seed: 5,
        ..TrainConfig::default()
    };
    let outcome = train_autoencoder(&mut model, &channel, &train, 1e-3)?;
    for rec in &outcome.history {
        let norms: Vec<String> = rec.column_norms.iter().map(|n| format!("{n:.3}")).collect();
        println!(
            "epoch {:>3}  train {:.5e}  val {:.5e}  |phi_k| = [{}]",
            rec.epoch,
            rec.train_mse,
            rec.val_mse,
            norms.join(", ")
        );
    }
    let learned = extract_pilot(&model)?;
    println!(
        "best val MSE {:.5e} at epoch {}; learned pilot feasible: {}",
        outcome.best_val_mse,
        outcome.best_epoch,
        validate_power(&learned, PowerConstraint::PerColumn)
    );
    Ok(())
}
