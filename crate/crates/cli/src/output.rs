//! Files written for one job: `<label>.csv`, `<label>.svg` and
//! `<label>.timing.csv`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::run::{run_with, RunError};
use crate::table::{header_line, render_svg, row_line, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical text form of `cfg`.
pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Comment lines heading every CSV file.
pub fn provenance(cfg: &RunConfig) -> Vec<String> {
    let mut lines = vec![
        format!("cbs {VERSION}"),
        format!("config_sha256 = {}", config_hash(cfg)),
        format!("seed = {}", cfg.seed.map_or("none".to_string(), |s| s.to_string())),
        format!(
            "grid_nodes = {}, samples = {}, realizations = {}, atoms = {}",
            cfg.nodes, cfg.samples, cfg.realizations, cfg.atoms
        ),
    ];
    lines.extend(cfg.to_text().lines().map(|l| format!("config: {l}")));
    lines
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobFiles {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub timing: PathBuf,
}

impl JobFiles {
    pub fn new(dir: &Path, label: &str) -> Self {
        JobFiles {
            csv: dir.join(format!("{label}.csv")),
            svg: dir.join(format!("{label}.svg")),
            timing: dir.join(format!("{label}.timing.csv")),
        }
    }
}

/// Runs `cfg`, appending each row to the CSV as soon as it is in order.
/// Wall times go to a separate file so the CSV only depends on the config.
pub fn run_to_dir(cfg: &RunConfig, plot: &[&str], dir: &Path, workers: Option<usize>) -> Result<(Table, JobFiles), RunError> {
    fs::create_dir_all(dir)?;
    let files = JobFiles::new(dir, &cfg.label);
    let mut csv = BufWriter::new(File::create(&files.csv)?);
    for c in provenance(cfg) {
        write!(csv, "# {c}\r\n")?;
    }
    write!(csv, "{}\r\n", header_line(&crate::run::columns(cfg)))?;
    csv.flush()?;
    let mut timing = BufWriter::new(File::create(&files.timing)?);
    write!(timing, "point,wall_seconds\r\n")?;
    let mut point = 0usize;
    let table = run_with(cfg, workers, |row, dt| {
        write!(csv, "{}\r\n", row_line(row))?;
        csv.flush()?;
        write!(timing, "{point},{:.6}\r\n", dt.as_secs_f64())?;
        timing.flush()?;
        point += 1;
        Ok(())
    })?;
    let title = format!("{} ({}, {})", cfg.label, cfg.mode.name(), cfg.channel.name());
    fs::write(&files.svg, render_svg(&table, cfg.axis.key(), plot, &title))?;
    Ok((table, files))
}
