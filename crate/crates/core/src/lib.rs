//! Channel estimation toolkit for MIMO receivers with few-bit ADCs.
//!
//! The library simulates the training phase of a quantized MIMO link and
//! provides three families of channel estimators:
//!
//! - closed-form linear baselines: unquantized LMMSE and the Bussgang-based
//!   BLMMSE for 1-bit (arcsine law) and multi-bit (approximate covariance)
//!   receivers ([`estimators`]);
//! - a feed-forward DNN regressor trained as a nonlinear MMSE estimator
//!   ([`regressor`]), built on a small reverse-mode autodiff engine ([`nn`]);
//! - an autoencoder whose first layer's weights embed the pilot matrix, so
//!   training jointly designs the pilot signal and the estimator
//!   ([`autoencoder`]).
//!
//! The [`harness`] module runs seeded Monte-Carlo MSE sweeps across schemes,
//! SNRs and ADC resolutions, searches DFT column subsets, and emits CSV /
//! plot-data files. The `qmimo` binary exposes all of it as subcommands; the
//! `examples/` directory has one runnable program per capability.

pub mod autoencoder;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod nn;
pub mod pilot;
pub mod quantizer;
pub mod regressor;
pub mod rng;

pub use error::{Error, Result};
