//! Command-line front end: Monte-Carlo sweeps, model training, DFT column
//! search, and plot-data emission. All commands are pure functions of the
//! config file and seed; outputs land in the `--out` directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qmimo::autoencoder::{extract_pilot, train_autoencoder, write_ae_history_csv, AutoencoderModel};
use qmimo::channel::ChannelModel;
use qmimo::harness::config::{
    bits_token, checkpoint_filename, format_snr, load_config, ExperimentConfig,
};
use qmimo::harness::search::{binomial, blmmse_subset_evaluator, dft_exhaustive_search, dft_random_search};
use qmimo::harness::sweep::{
    records_csv_string, run_mse_sweep, write_records_csv, write_records_se_csv,
};
use qmimo::harness::{emit_plot_data, read_records_csv};
use qmimo::nn::checkpoint::{Checkpoint, CheckpointKind, CheckpointMeta};
use qmimo::nn::{QuantizeForward, QuantizeNode, SteKind};
use qmimo::pilot::{dft_pilot, export_csv, PowerConstraint};
use qmimo::quantizer::{input_sigma, QuantizerSpec, Resolution};
use qmimo::regressor::{build_regressor, train_regressor, write_history_csv, RegressorConfig};
use qmimo::rng::stream;
use qmimo::Result;

#[derive(Parser)]
#[command(name = "qmimo", about = "Few-bit ADC MIMO channel estimation toolkit", version)]
struct Cli {
    /// Flat key=value experiment config (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for results, checkpoints, and plot data.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo MSE sweep and write results + plot data.
    Simulate,
    /// Train one regressor per (resolution, SNR) cell on the DFT pilot.
    TrainEstimator,
    /// Train one autoencoder (pilot + regressor) per (resolution, SNR) cell.
    TrainAutoencoder,
    /// Search DFT column subsets for the lowest BLMMSE MSE per cell.
    SearchDft {
        /// Max subsets to enumerate exhaustively; larger spaces fall back to
        /// random search with this many candidates.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Monte-Carlo trials per subset.
        #[arg(long, default_value_t = 1_000)]
        trials: usize,
    },
    /// Run the sweep and print the results CSV to stdout (no files written).
    Eval,
    /// Re-emit plot series from an existing results.csv in the out directory.
    PlotData,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn quantize_node(resolution: Resolution, sigma: f64) -> Result<QuantizeNode> {
    Ok(QuantizeNode {
        spec: QuantizerSpec::new(resolution, sigma)?,
        forward: QuantizeForward::Levels,
        ste: SteKind::Clipped,
    })
}

fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let records = run_mse_sweep(cfg, Some(out))?;
    write_records_csv(&records, &out.join("results.csv"))?;
    write_records_se_csv(&records, &out.join("results_se.csv"))?;
    let written = emit_plot_data(&records, out)?;
    println!("wrote {} records and {} files under {}", records.len(), written.len(), out.display());
    Ok(())
}

fn cmd_train_estimator(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let sys = &cfg.system;
    let channel = ChannelModel::new(cfg.channel, sys.m, sys.k)?;
    let pilot = dft_pilot(sys.tau, &cfg.dft_columns)?;
    let reg_cfg = RegressorConfig::new(sys.tau, sys.m, sys.k)?;
    for &resolution in &cfg.resolutions {
        for &snr_db in &sys.snr_db_list {
            let rho = sys.rho(snr_db);
            let spec = QuantizerSpec::new(resolution, input_sigma(sys.k, rho, sys.n0)?)?;
            let bits = bits_token(Some(resolution));
            let mut rng = stream(cfg.seed, &format!("init/dnn/{bits}/{snr_db}"), 0);
            let mut net = build_regressor(reg_cfg, &mut rng);
            let mut train = cfg.train;
            train.seed = cfg.seed;
            let outcome =
                train_regressor(&mut net, &channel, &pilot, rho, sys.n0, Some(&spec), &train)?;
            let name = checkpoint_filename("dnn", cfg.channel, Some(resolution), snr_db);
            Checkpoint {
                meta: CheckpointMeta {
                    kind: CheckpointKind::Regressor,
                    tau: sys.tau,
                    m: sys.m,
                    k: sys.k,
                    channel: cfg.channel,
                    resolution: Some(resolution),
                    snr_db,
                    rho,
                    n0: sys.n0,
                },
                network: net,
                pilot_param: None,
                constraint: None,
            }
            .save(&out.join(&name))?;
            let stem = name.trim_end_matches(".qmc");
            write_history_csv(&outcome.history, &out.join(format!("{stem}_history.csv")))?;
            println!(
                "trained {name}: best val MSE {:.5e} at epoch {} of {}",
                outcome.best_val_mse,
                outcome.best_epoch,
                outcome.history.len()
            );
        }
    }
    Ok(())
}

fn cmd_train_autoencoder(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let sys = &cfg.system;
    let channel = ChannelModel::new(cfg.channel, sys.m, sys.k)?;
    let init = dft_pilot(sys.tau, &cfg.dft_columns)?;
    for &resolution in &cfg.resolutions {
        for &snr_db in &sys.snr_db_list {
            let rho = sys.rho(snr_db);
            let sigma = input_sigma(sys.k, rho, sys.n0)?;
            let bits = bits_token(Some(resolution));
            let mut rng = stream(cfg.seed, &format!("init/ae/{bits}/{snr_db}"), 0);
            let mut model = AutoencoderModel::new(
                &init,
                sys.m,
                rho,
                sys.n0,
                PowerConstraint::PerColumn,
                Some(quantize_node(resolution, sigma)?),
                &mut rng,
            )?;
            let mut train = cfg.train;
            train.seed = cfg.seed;
            let outcome =
                train_autoencoder(&mut model, &channel, &train, cfg.pilot_learning_rate)?;
            let learned = extract_pilot(&model)?;
            let name = checkpoint_filename("ae", cfg.channel, Some(resolution), snr_db);
            Checkpoint {
                meta: CheckpointMeta {
                    kind: CheckpointKind::Autoencoder,
                    tau: sys.tau,
                    m: sys.m,
                    k: sys.k,
                    channel: cfg.channel,
                    resolution: Some(resolution),
                    snr_db,
                    rho,
                    n0: sys.n0,
                },
                network: model.net.clone(),
                pilot_param: Some(model.pilot_param.clone()),
                constraint: Some(model.constraint),
            }
            .save(&out.join(&name))?;
            let stem = name.trim_end_matches(".qmc");
            write_ae_history_csv(&outcome.history, &out.join(format!("{stem}_history.csv")))?;
            export_csv(&learned, &out.join(format!("{stem}_pilot.csv")))?;
            println!(
                "trained {name}: best val MSE {:.5e} at epoch {} of {}",
                outcome.best_val_mse,
                outcome.best_epoch,
                outcome.history.len()
            );
        }
    }
    Ok(())
}

fn cmd_search_dft(cfg: &ExperimentConfig, out: &Path, budget: usize, trials: usize) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let sys = &cfg.system;
    for &resolution in &cfg.resolutions {
        for &snr_db in &sys.snr_db_list {
            let rho = sys.rho(snr_db);
            let channel = ChannelModel::new(cfg.channel, sys.m, sys.k)?;
            let mut eval = blmmse_subset_evaluator(
                channel,
                sys.tau,
                resolution,
                rho,
                sys.n0,
                trials,
                cfg.seed,
                cfg.one_bit_scaling,
            );
            let exhaustive = binomial(sys.tau, sys.k) <= budget as u128;
            let (best, table) = if exhaustive {
                dft_exhaustive_search(sys.tau, sys.k, budget, &mut eval)?
            } else {
                let mut rng = stream(cfg.seed, "dft-search-candidates", 0);
                dft_random_search(sys.tau, sys.k, budget, &mut eval, &mut rng)?
            };
            let bits = bits_token(Some(resolution));
            let path = out.join(format!("dft_search_{bits}_snr{}.csv", format_snr(snr_db)));
            let mut body = String::from("columns,mse\n");
            for s in &table {
                let cols: Vec<String> = s.columns.iter().map(|c| c.to_string()).collect();
                body.push_str(&format!("{},{:e}\n", cols.join(" "), s.mse));
            }
            std::fs::write(&path, body)?;
            println!(
                "bits {bits} snr {snr_db} dB: best columns {:?} ({} search over {} subsets) -> {}",
                best,
                if exhaustive { "exhaustive" } else { "randomized" },
                table.len(),
                path.display()
            );
        }
    }
    Ok(())
}

fn cmd_eval(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    // checkpoints are read from the out directory; nothing is written
    let records = run_mse_sweep(cfg, Some(out))?;
    print!("{}", records_csv_string(&records));
    Ok(())
}

fn cmd_plot_data(out: &Path) -> Result<()> {
    let records = read_records_csv(&out.join("results.csv"))?;
    let written = emit_plot_data(&records, out)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate => cmd_simulate(&load(&cli)?, &cli.out),
        Command::TrainEstimator => cmd_train_estimator(&load(&cli)?, &cli.out),
        Command::TrainAutoencoder => cmd_train_autoencoder(&load(&cli)?, &cli.out),
        Command::SearchDft { budget, trials } => {
            cmd_search_dft(&load(&cli)?, &cli.out, *budget, *trials)
        }
        Command::Eval => cmd_eval(&load(&cli)?, &cli.out),
        Command::PlotData => cmd_plot_data(&cli.out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
