//! Empirical distortion factors of the few-bit quantizers.
//!
//! For each resolution, quantizes 10^6 unit-variance Gaussian samples with
//! the optimal uniform step size and compares the measured distortion factor
//! eta against the tabulated value.
//!
//! Run with: cargo run --example quantizer_distortion

use qmimo::quantizer::{empirical_distortion, quantizer_table, QuantizerSpec, ALL_RESOLUTIONS};
use qmimo::rng::stream;

fn main() -> qmimo::Result<()> {
    let mut rng = stream(1, "example/quantizer-distortion", 0);
    println!("{:<10} {:>10} {:>12} {:>12} {:>8}", "resolution", "step", "eta (table)", "eta (meas.)", "rel err");
    for res in ALL_RESOLUTIONS {
        let (delta, eta) = quantizer_table(res);
        let spec = QuantizerSpec::new(res, 1.0)?;
        let measured = empirical_distortion(&spec, 1_000_000, &mut rng)?;
        println!(
            "{:<10} {:>10.4} {:>12.4} {:>12.4} {:>7.2}%",
            format!("{res:?}"),
            delta,
            eta,
            measured,
            100.0 * (measured - eta).abs() / eta
        );
    }
    Ok(())
}
