//! Bussgang decomposition and arcsine law, verified by simulation.
//!
//! Draws correlated Gaussian pairs, hard-limits them, and compares the
//! empirical sign-output correlation against (2/pi) asin(rho_xy); then checks
//! that the Bussgang residual e = r - (1-eta) y is uncorrelated with y for a
//! 2-bit quantizer.
//!
//! Run with: cargo run --example bussgang_arcsine

use qmimo::quantizer::{quantize, quantizer_table, QuantizerSpec, Resolution};
use qmimo::rng::{standard_normal, stream};

fn main() -> qmimo::Result<()> {
    let mut rng = stream(2, "example/bussgang-arcsine", 0);
    let n = 500_000;

    println!("arcsine law: E[sign(x) sign(y)] vs (2/pi) asin(corr)");
    for corr in [0.2, 0.5, 0.8] {
        let mut acc = 0.0;
        for _ in 0..n {
            let u = standard_normal(&mut rng);
            let v = standard_normal(&mut rng);
            let x = u;
            let y = corr * u + (1.0 - corr * corr).sqrt() * v;
            acc += x.signum() * y.signum();
        }
        let predicted = 2.0 / std::f64::consts::PI * corr.asin();
        println!(
            "  corr {corr:.1}: empirical {:.4}, arcsine {:.4}",
            acc / n as f64,
            predicted
        );
    }

    println!("\nBussgang residual decorrelation, 2-bit quantizer:");
    let spec = QuantizerSpec::new(Resolution::TwoBit, 1.0)?;
    let (_, eta) = quantizer_table(Resolution::TwoBit);
    let y: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
    let (_, codes) = quantize(&y, &spec)?;
    let mut cross = 0.0;
    for (yi, c) in y.iter().zip(&codes) {
        let r = spec.optimal_level(*c);
        let e = r - (1.0 - eta) * yi;
        cross += e * yi;
    }
    println!(
        "  E[e y] = {:.5} (gain 1 - eta = {:.4})",
        cross / n as f64,
        1.0 - eta
    );
    Ok(())
}
