use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Header plus rows of already formatted cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// RFC 4180 quoting, LF line endings.
    pub fn render(&self) -> String {
        let line = |cells: &[String]| cells.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",") + "\n";
        let mut out = line(&self.header);
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Shortest round-trip decimal, as in the JSON output.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        format!("{x}")
    }
}

pub fn int(x: impl std::fmt::Display) -> String {
    x.to_string()
}

pub struct Emitted {
    pub result: Value,
    pub table: Table,
}

impl Emitted {
    pub fn new(result: impl Serialize, table: Table) -> Result<Self, CliError> {
        let result = serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Emitted { result, table })
    }
}

pub fn document(command: &str, config: Map<String, Value>, result: Value) -> Value {
    json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "config": config, "result": result })
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

/// Writes JSON (document) or CSV (table). A CSV written to a file gets a
/// `<out>.config.json` sidecar carrying the command and the config echo.
pub fn write(command: &str, config: Map<String, Value>, emitted: Emitted, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let (body, meta) = match format {
        Format::Json => (pretty(&document(command, config, emitted.result)), None),
        Format::Csv => (emitted.table.render(), Some(document(command, config, Value::Null))),
    };
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            if let Some(meta) = meta {
                let side = sidecar(path);
                std::fs::write(&side, pretty(&meta)).map_err(|e| CliError::Io(format!("{}: {e}", side.display())))?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}
