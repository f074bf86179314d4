//! Report files. Bodies depend only on the inputs; the wall-clock time goes
//! to `metadata.json` alone.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use pxlap_core::report::{to_csv, SummaryRow};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::CheckSpec;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const SOLVE_FILE: &str = "solve.json";

#[derive(Serialize)]
struct ReportFile<'a> {
    check: &'a str,
    index: usize,
    params: &'a CheckSpec,
    result: &'a Value,
}

pub fn report_name(index: usize, check: &str) -> String {
    format!("{index:02}-{check}.json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_report(dir: &Path, index: usize, spec: &CheckSpec, result: &Value) -> Result<()> {
    let body = ReportFile { check: spec.name(), index, params: spec, result };
    write_json(&dir.join(report_name(index, spec.name())), &body)
}

pub fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, to_csv(rows)).with_context(|| format!("writing {}", path.display()))
}

pub fn write_metadata(dir: &Path, command: &str, seed: u64, config: Option<&Path>) -> Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "command": command,
        "config": config.map(|p| p.display().to_string()),
        "seed": seed,
        "timestamp_unix": now,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&dir.join(METADATA_FILE), &meta)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}
