//! Exhaustive search over DFT column subsets for the 1-bit BLMMSE.
//!
//! All K-subsets of the tau DFT columns give orthogonal pilots, but their
//! quantized-domain MSE differs; this enumerates every subset with common
//! random numbers and reports the best and worst.
//!
//! Run with: cargo run --example dft_search

use qmimo::channel::{ChannelKind, ChannelModel};
use qmimo::harness::search::{binomial, blmmse_subset_evaluator, dft_exhaustive_search};
use qmimo::harness::OneBitScaling;
use qmimo::quantizer::Resolution;

fn main() -> qmimo::Result<()> {
    let (tau, k, m) = (8usize, 2usize, 2usize);
    let (rho, n0) = (10.0, 1.0);
    let channel = ChannelModel::new(ChannelKind::RayleighIid, m, k)?;
    let eval = blmmse_subset_evaluator(
        channel,
        tau,
        Resolution::OneBit,
        rho,
        n0,
        2_000,
        7,
        OneBitScaling::Bussgang,
    );
    println!("enumerating C({tau},{k}) = {} subsets...", binomial(tau, k));
    let (best, mut table) = dft_exhaustive_search(tau, k, 10_000, eval)?;
    table.sort_by(|a, b| a.mse.total_cmp(&b.mse));
    println!("best subset: {best:?}");
    for s in table.iter().take(3) {
        println!("  {:?}  mse = {:.5e}", s.columns, s.mse);
    }
    println!("  ...");
    for s in table.iter().rev().take(3).rev() {
        println!("  {:?}  mse = {:.5e}", s.columns, s.mse);
    }
    Ok(())
}
