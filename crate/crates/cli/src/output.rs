use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::experiment::ResultsTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => bail!("unknown output format `{other}` (use csv or json)"),
        }
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "experiment",
    "estimator",
    "m",
    "trials",
    "mean_rel_err",
    "rmse",
    "mean_err_est",
    "seed",
];

pub fn write_csv<W: Write>(table: &ResultsTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in &table.rows {
        w.serialize(row)?;
    }
    if table.rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

fn document(table: &ResultsTable) -> serde_json::Value {
    json!({
        "config": table.config,
        "notes": table.notes,
        "rows": table.rows,
        "extras": table.extras,
    })
}

/// The JSON sidecar written next to a CSV file: `results.csv` gets
/// `results.csv.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the table in the configured format to the configured path, or to
/// stdout when no path is set. CSV output to a file also writes the sidecar.
pub fn write_results(table: &ResultsTable) -> Result<()> {
    let cfg = &table.config;
    match (&cfg.out, cfg.format) {
        (Some(path), OutputFormat::Csv) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(table, file)?;
            let side = sidecar_path(path);
            let file = File::create(&side).with_context(|| format!("creating {}", side.display()))?;
            serde_json::to_writer_pretty(file, &document(table))?;
        }
        (Some(path), OutputFormat::Json) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            serde_json::to_writer_pretty(file, &document(table))?;
        }
        (None, OutputFormat::Csv) => write_csv(table, io::stdout().lock())?,
        (None, OutputFormat::Json) => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &document(table))?;
            writeln!(out)?;
        }
    }
    Ok(())
}
