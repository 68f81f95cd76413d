//! Number formatting, provenance headers and CSV emission.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// CSV cell for a number: shortest form of the 9-digit rounding, scientific
/// notation for very small or very large magnitudes.
pub fn cell(x: f64) -> String {
    let r = sig9(x);
    if r == 0.0 {
        "0".into()
    } else if (1e-4..1e9).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn vec_json(v: &nalgebra::Vector3<f64>) -> Value {
    json!([sig9(v.x), sig9(v.y), sig9(v.z)])
}

/// Who produced an output and with what settings.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub version: &'static str,
    /// Arguments after the program name, minus the output path so reruns into
    /// different files produce identical bytes.
    pub command: String,
    pub seed: u64,
}

impl Provenance {
    pub fn from_args(args: &[String], seed: u64) -> Self {
        let mut kept = Vec::new();
        let mut skip_next = false;
        for a in args.iter().skip(1) {
            if skip_next {
                skip_next = false;
                continue;
            }
            if a == "--out" {
                skip_next = true;
                continue;
            }
            if a.starts_with("--out=") {
                continue;
            }
            kept.push(a.as_str());
        }
        Self { version: env!("CARGO_PKG_VERSION"), command: format!("discordlab {}", kept.join(" ")), seed }
    }

    pub fn json(&self) -> Value {
        json!({ "version": self.version, "command": self.command, "seed": self.seed })
    }

    pub fn csv_comments(&self) -> Vec<String> {
        vec![
            format!("discordlab {}", self.version),
            format!("command: {}", self.command),
            format!("seed: {}", self.seed),
        ]
    }
}

/// A CSV table with `#` comment lines on top, LF line endings.
pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(comments: Vec<String>, header: &[&str]) -> Self {
        Self { comments, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        for c in &self.comments {
            writeln!(buf, "# {c}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        drop(w);
        Ok(buf)
    }
}

/// Writes to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn json_bytes(value: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
