//! Run manifests and the JSON/CSV writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use clap::Args;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Bumped whenever a field is renamed or removed from a report.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the JSON report here ("-" for stdout).
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Write the CSV projection here ("-" for stdout).
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Suppress the human-readable summary.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seed: u64) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_owned(),
            config,
            seed,
            tool_version: concat!("fei ", env!("CARGO_PKG_VERSION")).to_owned(),
            timestamp: timestamp(),
        }
    }
}

/// Current UTC time, or `SOURCE_DATE_EPOCH` when set, for byte-identical reruns.
fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0));
    pinned
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Rows for the CSV projection of a result.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Trailing `# ...` comment line.
    pub footer: Option<String>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            ..Table::default()
        }
    }

    fn render(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        let mut text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
        if let Some(footer) = &self.footer {
            text.push_str("# ");
            text.push_str(footer);
            text.push('\n');
        }
        text
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// What a command hands back to `main`.
pub struct Outcome {
    pub config: Value,
    pub result: Value,
    pub summary: Vec<String>,
    pub table: Table,
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn write_to(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let err = |source| CliError::Output {
        path: path.to_owned(),
        source,
    };
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes).map_err(err)?;
        out.flush().map_err(err)
    } else {
        std::fs::write(path, bytes).map_err(err)
    }
}

pub fn emit(command: &str, opts: &GlobalOpts, outcome: Outcome) -> Result<(), CliError> {
    let stdout_taken = [&opts.json, &opts.csv]
        .into_iter()
        .any(|p| p.as_deref() == Some(Path::new("-")));
    if let Some(path) = &opts.json {
        let doc = serde_json::json!({
            "manifest": RunManifest::new(command, outcome.config, opts.seed),
            "result": outcome.result,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json value serializes");
        text.push('\n');
        write_to(path, text.as_bytes())?;
    }
    if let Some(path) = &opts.csv {
        write_to(path, outcome.table.render().as_bytes())?;
    }
    if !opts.quiet && !stdout_taken {
        for line in outcome.summary {
            println!("{line}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_renders_with_footer() {
        let mut t = Table::new(&["h", "sup_defect"]);
        t.rows.push(vec![num(1e-2), num(0.1)]);
        t.footer = Some("slope=-1.0".into());
        assert_eq!(t.render(), "h,sup_defect\n0.01,0.1\n# slope=-1.0\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [1e-300, 0.1 + 0.2, -3.0, 12345678.9] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1e-5), "1e-5");
    }
}
