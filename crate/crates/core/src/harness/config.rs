//! Flat key=value experiment configuration.
//!
//! The config file is plain text: one `key = value` per line, `#` comments,
//! list values comma-separated. Unknown keys are errors so typos cannot
//! silently fall back to defaults. The full key list is documented in the
//! README.

use std::path::Path;

use crate::channel::ChannelKind;
use crate::error::{Error, Result};
use crate::estimators::snr_to_rho;
use crate::quantizer::Resolution;
use crate::regressor::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub m: usize,
    pub k: usize,
    pub tau: usize,
    pub n0: f64,
    pub snr_db_list: Vec<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.tau == 0 {
            return Err(Error::Config("M, K, tau must be positive".into()));
        }
        if self.k > self.tau {
            return Err(Error::Config(format!(
                "K = {} exceeds tau = {}: cannot pick K distinct DFT columns",
                self.k, self.tau
            )));
        }
        if !(self.n0 > 0.0) {
            return Err(Error::Config(format!("N0 must be positive, got {}", self.n0)));
        }
        if self.snr_db_list.is_empty() {
            return Err(Error::Config("snr_db list is empty".into()));
        }
        Ok(())
    }

    /// Transmit power scale for one SNR point, from
    /// SNR = rho tau Tr{C_h} / (K Tr{C_n}) with identity C_h and white noise.
    pub fn rho(&self, snr_db: f64) -> f64 {
        let snr = 10f64.powf(snr_db / 10.0);
        let c_h_trace = (self.m * self.k) as f64;
        let c_n_trace = self.n0 * (self.tau * self.m) as f64;
        snr_to_rho(snr, c_h_trace, c_n_trace, self.k, self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    /// Bussgang LMMSE on the quantized observation, DFT pilot.
    BlmmseDft,
    /// LMMSE on the unquantized observation (lower-bound diagnostic).
    LmmseUnquantized,
    /// Trained regressor on quantizer codes, DFT pilot.
    DnnDft,
    /// Trained regressor with its jointly learned pilot.
    DnnLearnedPilot,
}

impl Scheme {
    pub fn token(self) -> &'static str {
        match self {
            Scheme::BlmmseDft => "blmmse-dft",
            Scheme::LmmseUnquantized => "lmmse",
            Scheme::DnnDft => "dnn-dft",
            Scheme::DnnLearnedPilot => "dnn-learned",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "blmmse-dft" => Ok(Scheme::BlmmseDft),
            "lmmse" => Ok(Scheme::LmmseUnquantized),
            "dnn-dft" => Ok(Scheme::DnnDft),
            "dnn-learned" => Ok(Scheme::DnnLearnedPilot),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Which linear estimator the 1-bit BLMMSE cells use: the shared Bussgang
/// form with the Table-row distortion factor, or the exact closed form on raw
/// sign codes via the arcsine law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OneBitScaling {
    #[default]
    Bussgang,
    RawCodes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub channel: ChannelKind,
    pub schemes: Vec<Scheme>,
    pub resolutions: Vec<Resolution>,
    pub trials: usize,
    pub seed: u64,
    /// DFT column indices used by the fixed-pilot schemes.
    pub dft_columns: Vec<usize>,
    pub one_bit_scaling: OneBitScaling,
    pub train: TrainConfig,
    pub pilot_learning_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig {
                m: 4,
                k: 4,
                tau: 16,
                n0: 1.0,
                snr_db_list: (-2..=6).map(|i| (i * 5) as f64).collect(),
            },
            channel: ChannelKind::RayleighIid,
            schemes: vec![
                Scheme::BlmmseDft,
                Scheme::LmmseUnquantized,
                Scheme::DnnDft,
                Scheme::DnnLearnedPilot,
            ],
            resolutions: vec![Resolution::OneBit, Resolution::TwoBit],
            trials: 20_000,
            seed: 0,
            dft_columns: (0..4).collect(),
            one_bit_scaling: OneBitScaling::default(),
            train: TrainConfig::default(),
            pilot_learning_rate: 1e-3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes list is empty".into()));
        }
        if self.dft_columns.len() != self.system.k {
            return Err(Error::Config(format!(
                "dft_columns has {} entries, need K = {}",
                self.dft_columns.len(),
                self.system.k
            )));
        }
        let quantized = self
            .schemes
            .iter()
            .any(|s| !matches!(s, Scheme::LmmseUnquantized));
        if quantized && self.resolutions.is_empty() {
            return Err(Error::Config("bits list is empty but quantized schemes requested".into()));
        }
        self.train.validate()?;
        if self.pilot_learning_rate < 0.0 {
            return Err(Error::Config("pilot_learning_rate must be >= 0".into()));
        }
        Ok(())
    }
}

/// CSV token for the `bits` column: 1, t, 2, 3, 4; `inf` = unquantized.
pub fn bits_token(resolution: Option<Resolution>) -> &'static str {
    match resolution {
        None => "inf",
        Some(Resolution::OneBit) => "1",
        Some(Resolution::Ternary) => "t",
        Some(Resolution::TwoBit) => "2",
        Some(Resolution::ThreeBit) => "3",
        Some(Resolution::FourBit) => "4",
    }
}

pub fn parse_bits_token(s: &str) -> Result<Option<Resolution>> {
    match s {
        "inf" => Ok(None),
        "1" => Ok(Some(Resolution::OneBit)),
        "t" => Ok(Some(Resolution::Ternary)),
        "2" => Ok(Some(Resolution::TwoBit)),
        "3" => Ok(Some(Resolution::ThreeBit)),
        "4" => Ok(Some(Resolution::FourBit)),
        _ => Err(Error::Config(format!("unknown bits token '{s}'"))),
    }
}

pub fn channel_token(kind: ChannelKind) -> &'static str {
    match kind {
        ChannelKind::RayleighIid => "rayleigh",
        ChannelKind::Los => "los",
    }
}

pub fn parse_channel_token(s: &str) -> Result<ChannelKind> {
    match s {
        "rayleigh" => Ok(ChannelKind::RayleighIid),
        "los" => Ok(ChannelKind::Los),
        _ => Err(Error::Config(format!("unknown channel '{s}'"))),
    }
}

/// SNR value as a filename fragment: `-10 -> "m10"`, `7.5 -> "7p5"`.
pub fn format_snr(snr_db: f64) -> String {
    let s = if snr_db == snr_db.trunc() {
        format!("{}", snr_db as i64)
    } else {
        format!("{snr_db}")
    };
    s.replace('-', "m").replace('.', "p")
}

/// Checkpoint filename convention shared by the trainers and the sweep:
/// `{dnn|ae}_{channel}_{bits}_snr{snr}.qmc`.
pub fn checkpoint_filename(
    prefix: &str,
    channel: ChannelKind,
    resolution: Option<Resolution>,
    snr_db: f64,
) -> String {
    format!(
        "{prefix}_{}_{}_snr{}.qmc",
        channel_token(channel),
        bits_token(resolution),
        format_snr(snr_db)
    )
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(value: &str, f: F) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
}

/// Parse a config file body; keys not present keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "m" => cfg.system.m = parse_num(key, value)?,
            "k" => cfg.system.k = parse_num(key, value)?,
            "tau" => cfg.system.tau = parse_num(key, value)?,
            "n0" => cfg.system.n0 = parse_num(key, value)?,
            "snr_db" => cfg.system.snr_db_list = parse_list(value, |s| parse_num("snr_db", s))?,
            "channel" => cfg.channel = parse_channel_token(value)?,
            "schemes" => cfg.schemes = parse_list(value, Scheme::parse)?,
            "bits" => {
                cfg.resolutions = parse_list(value, |s| {
                    parse_bits_token(s)?.ok_or_else(|| {
                        Error::Config("'inf' is not a quantizer resolution; use the lmmse scheme".into())
                    })
                })?
            }
            "trials" => cfg.trials = parse_num(key, value)?,
            "seed" => cfg.seed = parse_num(key, value)?,
            "dft_columns" => {
                cfg.dft_columns = parse_list(value, |s| parse_num("dft_columns", s))?
            }
            "one_bit_scaling" => {
                cfg.one_bit_scaling = match value {
                    "bussgang" => OneBitScaling::Bussgang,
                    "raw" => OneBitScaling::RawCodes,
                    _ => {
                        return Err(Error::Config(format!(
                            "one_bit_scaling must be 'bussgang' or 'raw', got '{value}'"
                        )))
                    }
                }
            }
            "train_samples" => cfg.train.train_samples = parse_num(key, value)?,
            "val_samples" => cfg.train.val_samples = parse_num(key, value)?,
            "batch_size" => cfg.train.batch_size = parse_num(key, value)?,
            "max_epochs" => cfg.train.max_epochs = parse_num(key, value)?,
            "patience" => cfg.train.patience = parse_num(key, value)?,
            "learning_rate" => cfg.train.learning_rate = parse_num(key, value)?,
            "lr_decay" => cfg.train.lr_decay = parse_num(key, value)?,
            "pilot_learning_rate" => cfg.pilot_learning_rate = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
    }
    // keep the default column set in lockstep with K when only K was given
    if cfg.dft_columns.len() != cfg.system.k
        && cfg.dft_columns == (0..4).collect::<Vec<_>>()
        && cfg.system.k <= cfg.system.tau
    {
        cfg.dft_columns = (0..cfg.system.k).collect();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.system.snr_db_list, vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(cfg.trials, 20_000);
    }

    #[test]
    fn rho_from_snr_identity_covariances() {
        let sys = SystemConfig { m: 4, k: 4, tau: 16, n0: 2.0, snr_db_list: vec![0.0] };
        // identity C_h, white noise: rho = SNR * N0
        assert_relative_eq!(sys.rho(0.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(sys.rho(10.0), 20.0, epsilon = 1e-9);
    }

    #[test]
    fn parse_round_trip() {
        let text = "
            # sweep shape
            m = 2
            k = 2
            tau = 4
            n0 = 1.0
            snr_db = 0, 10, 20
            channel = los
            schemes = lmmse, blmmse-dft
            bits = 1, t
            trials = 500
            seed = 7
            dft_columns = 0, 2
            one_bit_scaling = raw
            learning_rate = 5e-4
        ";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.system.m, 2);
        assert_eq!(cfg.channel, crate::channel::ChannelKind::Los);
        assert_eq!(cfg.schemes, vec![Scheme::LmmseUnquantized, Scheme::BlmmseDft]);
        assert_eq!(cfg.resolutions.len(), 2);
        assert_eq!(cfg.dft_columns, vec![0, 2]);
        assert_eq!(cfg.one_bit_scaling, OneBitScaling::RawCodes);
        assert_eq!(cfg.train.learning_rate, 5e-4);
    }

    #[test]
    fn unknown_key_and_bad_values_error() {
        assert!(parse_config("mm = 4").is_err());
        assert!(parse_config("trials = many").is_err());
        assert!(parse_config("bits = inf").is_err());
        assert!(parse_config("m = 4\nk = 8\ntau = 4").is_err()); // K > tau
    }

    #[test]
    fn default_columns_follow_k() {
        let cfg = parse_config("m = 2\nk = 2\ntau = 8").unwrap();
        assert_eq!(cfg.dft_columns, vec![0, 1]);
    }

    #[test]
    fn tokens() {
        use crate::quantizer::Resolution::*;
        for (r, t) in [
            (None, "inf"),
            (Some(OneBit), "1"),
            (Some(Ternary), "t"),
            (Some(TwoBit), "2"),
            (Some(ThreeBit), "3"),
            (Some(FourBit), "4"),
        ] {
            assert_eq!(bits_token(r), t);
            assert_eq!(parse_bits_token(t).unwrap(), r);
        }
        assert_eq!(format_snr(-10.0), "m10");
        assert_eq!(format_snr(7.5), "7p5");
        assert_eq!(
            checkpoint_filename("dnn", crate::channel::ChannelKind::RayleighIid, Some(OneBit), -5.0),
            "dnn_rayleigh_1_snrm5.qmc"
        );
    }
}
