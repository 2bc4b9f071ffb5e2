//! Structured report output: line-delimited JSON records plus companion
//! comma-separated tables for plotting. Payload files are deterministic for a
//! fixed config and seed list; wall-clock metadata lives in a separate file.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

/// One verification record: the identity checked (as a formula), the residual,
/// the tolerance it had to meet, and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<[f64; 2]>,
}

impl CheckRecord {
    pub fn new(name: &str, anchor: &str, residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
            value: None,
            expected: None,
        }
    }

    pub fn with_value(mut self, re: f64, im: f64) -> Self {
        self.value = Some([re, im]);
        self
    }

    pub fn with_expected(mut self, re: f64, im: f64) -> Self {
        self.expected = Some([re, im]);
        self
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut out = Vec::new();
    for rec in records {
        serde_json::to_writer(&mut out, rec).expect("record serialisation");
        out.push(b'\n');
    }
    fs::write(path, out)
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> std::io::Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    fs::write(path, out)
}

/// Run metadata (timestamps, paths). Segregated from the payload so payloads
/// stay byte-identical across reruns.
#[derive(Debug, Serialize)]
pub struct RunMeta {
    pub command: String,
    pub config_path: Option<String>,
    pub timestamp_unix_ms: u128,
}

pub fn write_meta(path: &Path, command: &str, config_path: Option<&str>) -> std::io::Result<()> {
    let meta = RunMeta {
        command: command.to_string(),
        config_path: config_path.map(str::to_string),
        timestamp_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    };
    let mut out = serde_json::to_vec_pretty(&meta).expect("meta serialisation");
    out.push(b'\n');
    fs::write(path, out)
}

pub fn print_table(records: &[CheckRecord]) {
    let width = records
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    for rec in records {
        println!(
            "{}  {:width$}  residual {:10.3e}  tolerance {:9.1e}  {}",
            if rec.pass { "PASS" } else { "FAIL" },
            rec.name,
            rec.residual,
            rec.tolerance,
            rec.anchor,
            width = width
        );
    }
    let mut out = std::io::stdout();
    let _ = out.flush();
}
