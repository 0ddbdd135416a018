//! Plot-data emission: one gnuplot-compatible series per scheme x bits.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::{bits_token, channel_token};
use super::sweep::{write_records_csv, ResultRecord};

/// Write the master CSV plus one whitespace-separated series file per
/// (scheme, bits) group, ordered by scheme token, bits token, and ascending
/// SNR. Returns the paths written. MSE curves are meant for a log-y axis.
pub fn emit_plot_data(records: &[ResultRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Precondition("no records to plot".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let master = dir.join("results.csv");
    write_records_csv(records, &master)?;
    written.push(master);

    let mut keys: Vec<(&'static str, &'static str)> = records
        .iter()
        .map(|r| (r.scheme.token(), bits_token(r.bits)))
        .collect();
    keys.sort_unstable();
    keys.dedup();

    for (scheme, bits) in keys {
        let mut series: Vec<&ResultRecord> = records
            .iter()
            .filter(|r| r.scheme.token() == scheme && bits_token(r.bits) == bits)
            .collect();
        series.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        let path = dir.join(format!("series_{scheme}_{bits}.dat"));
        let mut f = std::fs::File::create(&path)?;
        writeln!(f, "# scheme={scheme} bits={bits} channel={}", channel_token(series[0].channel))?;
        writeln!(f, "# mse vs snr_db; plot with logscale y")?;
        writeln!(f, "# snr_db mse")?;
        for rec in series {
            writeln!(f, "{} {:e}", rec.snr_db, rec.mse)?;
        }
        written.push(path);
    }
    Ok(written)
}
