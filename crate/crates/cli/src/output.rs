//! File outputs: series tables, snapshots, checkpoints and the run manifest.
//!
//! Everything is written with full-precision shortest decimal formatting, so
//! identical runs produce byte-identical files.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use feedwalk_core::Distribution64;

use crate::config::RunConfig;
use crate::error::{io_err, CliError, Result};
use crate::run::{CheckpointRow, GridRow};

pub const CHECKPOINT_MAGIC: &str = "# feedwalk-checkpoint v1";

pub struct RunWriter {
    out_dir: PathBuf,
    series: Option<File>,
}

impl RunWriter {
    pub fn create(out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            series: None,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    fn series_file(&mut self, header: &str) -> Result<&mut File> {
        if self.series.is_none() {
            let path = self.out_dir.join("series.csv");
            let mut f = File::create(&path).map_err(io_err(&path))?;
            writeln!(f, "{header}").map_err(io_err(&path))?;
            self.series = Some(f);
        }
        Ok(self.series.as_mut().unwrap())
    }

    pub fn push_lattice_row(&mut self, row: &CheckpointRow) -> Result<()> {
        let path = self.out_dir.join("series.csv");
        let f = self.series_file(
            "t,sigma_q,sigma_method,q_used,window_lo,window_hi,total_p,truncated_mass",
        )?;
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            row.t,
            row.sigma_q,
            row.sigma_method,
            row.q_used,
            row.window_lo,
            row.window_hi,
            row.total_p,
            row.truncated_mass
        )
        .map_err(io_err(path))
    }

    pub fn push_grid_row(&mut self, row: &GridRow) -> Result<()> {
        let path = self.out_dir.join("series.csv");
        let f = self.series_file("time,sigma_q,sigma_method,q_used,mass,mass_drift,edge_lo,edge_hi")?;
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            row.time,
            row.sigma_q,
            row.sigma_method,
            row.q_used,
            row.mass,
            row.mass_drift,
            row.edge_lo,
            row.edge_hi
        )
        .map_err(io_err(path))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, text).map_err(io_err(path))
    }

    pub fn write_distribution(&self, name: &str, dist: &Distribution64, t: Option<u64>) -> Result<()> {
        self.write_text(name, &feedwalk_core::snapshot::write_distribution(dist, t))
    }

    pub fn write_checkpoint(&self, t: u64, model_tag: &str, state_text: &str) -> Result<()> {
        let name = format!("checkpoint_t{t}.txt");
        let text = format!("{CHECKPOINT_MAGIC} model={model_tag} t={t}\n{state_text}");
        self.write_text(&name, &text)
    }

    pub fn finish(&mut self) -> Result<()> {
        if let Some(f) = self.series.as_mut() {
            f.flush().map_err(io_err(self.out_dir.join("series.csv")))?;
        }
        Ok(())
    }
}

/// Splits a checkpoint file into its tagged first line and the state text.
pub fn parse_checkpoint(text: &str) -> Result<(&str, u64, &str)> {
    let (first, rest) = text
        .split_once('\n')
        .ok_or_else(|| CliError::Checkpoint("empty checkpoint file".into()))?;
    let payload = first
        .strip_prefix(CHECKPOINT_MAGIC)
        .ok_or_else(|| CliError::Checkpoint(format!("unsupported checkpoint header `{first}`")))?;
    let mut model = None;
    let mut t = None;
    for token in payload.split_whitespace() {
        if let Some(v) = token.strip_prefix("model=") {
            model = Some(v);
        } else if let Some(v) = token.strip_prefix("t=") {
            t = v.parse::<u64>().ok();
        }
    }
    match (model, t) {
        (Some(model), Some(t)) => Ok((model, t, rest)),
        _ => Err(CliError::Checkpoint("checkpoint header missing model or t".into())),
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub run: ManifestRun<'a>,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<ManifestLedger>,
}

#[derive(Debug, Serialize)]
pub struct ManifestRun<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resumed_from: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ManifestLedger {
    pub final_t: f64,
    pub total: f64,
    pub truncated_mass: f64,
    pub conservation_error: f64,
    pub window_lo: f64,
    pub window_hi: f64,
}

pub fn write_manifest(out_dir: &Path, manifest: &Manifest<'_>) -> Result<()> {
    let text = toml::to_string_pretty(manifest)
        .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
    let path = out_dir.join("manifest.toml");
    fs::write(&path, text).map_err(io_err(path))
}

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
