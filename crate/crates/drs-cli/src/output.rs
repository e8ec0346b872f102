//! Output envelopes and CSV assembly.
//!
//! Every JSON artifact is wrapped in the same envelope:
//!
//! ```json
//! { "schema_version": 1, "command": "...", "config": { ... }, "result": { ... } }
//! ```
//!
//! `config` echoes the fully resolved parameters of the run (defaults
//! included), `result` carries the payload. CSV artifacts are headered,
//! UTF-8, LF-terminated, with `.` as the decimal separator; floats are
//! rendered with Rust's shortest round-trip formatting, so writing and
//! re-reading a value is lossless and byte-stable across runs.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Version tag carried by every JSON envelope.
pub const SCHEMA_VERSION: u32 = 1;

/// The common JSON wrapper around a command's output.
#[derive(Debug, Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    /// Envelope format version.
    pub schema_version: u32,
    /// Subcommand that produced the artifact.
    pub command: &'static str,
    /// Fully resolved parameters of the run.
    pub config: C,
    /// Command payload.
    pub result: R,
}

/// Renders an envelope as pretty JSON with a trailing newline.
pub fn envelope_json<C: Serialize, R: Serialize>(
    command: &'static str,
    config: &C,
    result: &R,
) -> anyhow::Result<String> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&env).context("serializing JSON envelope")?;
    text.push('\n');
    Ok(text)
}

/// Incremental CSV assembly with a fixed header.
#[derive(Debug)]
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    /// Starts a document with the given header row.
    pub fn new(header: &[&str]) -> Csv {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv {
            buf,
            columns: header.len(),
        }
    }

    /// Appends one row; the field count must match the header.
    pub fn row(&mut self, fields: &[CsvField]) {
        assert_eq!(fields.len(), self.columns, "CSV row width mismatch");
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match f {
                CsvField::F(x) => {
                    let _ = write!(self.buf, "{x}");
                }
                CsvField::U(x) => {
                    let _ = write!(self.buf, "{x}");
                }
                CsvField::S(x) => self.buf.push_str(x),
            }
        }
        self.buf.push('\n');
    }

    /// Finishes the document.
    pub fn into_string(self) -> String {
        self.buf
    }
}

/// One CSV cell. Strings are written verbatim and must not contain commas
/// or newlines (all strings emitted by this crate are fixed identifiers).
#[derive(Debug)]
pub enum CsvField {
    /// Float cell, shortest round-trip decimal.
    F(f64),
    /// Unsigned integer cell.
    U(u64),
    /// Verbatim string cell.
    S(&'static str),
}

/// Writes `text` to the file at `out`, or to stdout when `out` is `None`.
pub fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("writing to stdout")?;
            Ok(())
        }
    }
}

/// Writes `text` to `path`, creating parent directories as needed.
pub fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_are_lf_terminated_and_dot_decimal() {
        let mut csv = Csv::new(&["a", "b", "c"]);
        csv.row(&[CsvField::U(3), CsvField::F(0.5), CsvField::S("x")]);
        csv.row(&[CsvField::U(4), CsvField::F(1e-9), CsvField::S("y")]);
        let text = csv.into_string();
        // float Display is positional shortest-round-trip, never exponent form
        assert_eq!(text, "a,b,c\n3,0.5,x\n4,0.000000001,y\n");
        assert!("0.000000001".parse::<f64>().unwrap() == 1e-9);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn envelope_carries_schema_version_and_sections() {
        #[derive(Serialize)]
        struct Cfg {
            s: f64,
        }
        let text = envelope_json("demo", &Cfg { s: 1.0 }, &42u32).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "demo");
        assert_eq!(v["config"]["s"], 1.0);
        assert_eq!(v["result"], 42);
    }

    #[test]
    #[should_panic(expected = "width mismatch")]
    fn csv_row_width_is_enforced() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[CsvField::U(1)]);
    }
}
