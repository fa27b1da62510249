use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "phfock";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Envelope shared by every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    /// Mathematical statement behind each reported quantity.
    pub statements: BTreeMap<&'static str, &'static str>,
    pub result: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'static str, config: &'a RunConfig, statements: &[(&'static str, &'static str)], result: T) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            config,
            statements: statements.iter().copied().collect(),
            result,
        }
    }
}

pub fn out_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&config.out)?;
    Ok(config.out.clone())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
