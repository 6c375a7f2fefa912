//! CSV series files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::run::{Cell, Outcome, Series};

pub const CSV_HEADER: [&str; 6] = ["N", "series", "log10_pe", "pe", "iterations_used", "wall_ms"];

fn file_name(prefix: &str, stem: &str, ext: &str) -> String {
    if prefix.is_empty() {
        format!("{stem}.{ext}")
    } else {
        format!("{prefix}_{stem}.{ext}")
    }
}

pub fn write_series(dir: &Path, prefix: &str, series: &Series) -> anyhow::Result<PathBuf> {
    let path = dir.join(file_name(prefix, &series.name, "csv"));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
    w.write_record(CSV_HEADER)?;
    for r in &series.rows {
        w.write_record([
            r.n.to_string(),
            r.series.clone(),
            format!("{:.6}", r.log10_pe),
            format!("{:e}", r.pe),
            r.iterations_used.to_string(),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    library: &'static str,
    library_version: &'static str,
    command: &'static str,
    seed: u64,
    config_sha256: String,
    config: &'a Config,
    config_text: &'a str,
    outputs: Vec<String>,
    cells: &'a [Cell],
}

pub fn write_all(
    dir: &Path,
    command: &'static str,
    config: &Config,
    config_text: &str,
    outcome: &Outcome,
) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let prefix = &config.output.prefix;
    let mut written = Vec::new();
    for s in &outcome.series {
        written.push(write_series(dir, prefix, s)?);
    }
    let manifest = Manifest {
        library: "tandem-core",
        library_version: tandem_core::VERSION,
        command,
        seed: config.network.seed,
        config_sha256: sha256_hex(config_text.as_bytes()),
        config,
        config_text,
        outputs: written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        cells: &outcome.cells,
    };
    let path = dir.join(file_name(prefix, "manifest", "json"));
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
