//! Experiment orchestration: configuration, Monte-Carlo MSE sweeps, DFT
//! column-subset search, and plot-data emission.
//!
//! Everything here is a pure function of (config, seed): each sweep cell and
//! each search subset derives its own RNG stream from a stable label, so
//! re-running any part reproduces results byte for byte.

pub mod config;
pub mod plotdata;
pub mod search;
pub mod sweep;

pub use config::{
    bits_token, channel_token, parse_bits_token, parse_config, ExperimentConfig, OneBitScaling,
    Scheme, SystemConfig,
};
pub use plotdata::emit_plot_data;
pub use search::{dft_exhaustive_search, dft_random_search, SubsetScore};
pub use sweep::{
    mse_per_entry, read_records_csv, records_csv_string, run_mse_sweep, write_records_csv,
    write_records_se_csv, ResultRecord,
};
