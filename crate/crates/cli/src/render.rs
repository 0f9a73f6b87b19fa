//! Output rendering (json, csv, aligned text) and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

/// What a subcommand produced. `table` is the natural tabular view when
/// there is one; otherwise csv and text fall back to flattened key/value
/// pairs of `json`.
pub struct Rendered {
    pub name: &'static str,
    pub json: Value,
    pub table: Option<Table>,
    pub ok: bool,
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Picks `columns` out of each object in `items`.
    pub fn from_objects(items: &[Value], columns: &[&str]) -> Table {
        let rows = items
            .iter()
            .map(|item| columns.iter().map(|c| scalar(item.get(*c).unwrap_or(&Value::Null))).collect())
            .collect();
        Table { header: columns.iter().map(|c| c.to_string()).collect(), rows }
    }

    fn pairs(json: &Value) -> Table {
        let mut rows = Vec::new();
        flatten(json, String::new(), &mut rows);
        Table { header: vec!["key".into(), "value".into()], rows }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(v: &Value, prefix: String, out: &mut Vec<Vec<String>>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(child, join(k), out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (i, child) in items.iter().enumerate() {
                flatten(child, join(&i.to_string()), out);
            }
        }
        Value::Array(items) => {
            let joined: Vec<String> = items.iter().map(scalar).collect();
            out.push(vec![prefix, joined.join(" ")]);
        }
        other => out.push(vec![prefix, scalar(other)]),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn to_csv(t: &Table) -> String {
    let mut out = String::new();
    for line in std::iter::once(&t.header).chain(&t.rows) {
        let fields: Vec<String> = line.iter().map(|f| csv_field(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn to_text(t: &Table) -> String {
    let widths: Vec<usize> = (0..t.header.len())
        .map(|c| std::iter::once(&t.header).chain(&t.rows).map(|r| r.get(c).map_or(0, String::len)).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in std::iter::once(&t.header).chain(&t.rows) {
        let cells: Vec<String> = line.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

impl Rendered {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("json value serializes");
                s.push('\n');
                s
            }
            Format::Csv => to_csv(self.table.as_ref().unwrap_or(&Table::pairs(&self.json))),
            Format::Text => to_text(self.table.as_ref().unwrap_or(&Table::pairs(&self.json))),
        }
    }

    /// Writes `<dir>/<name>.<ext>` via a temporary file and rename, so a
    /// reader never sees a partial artifact.
    pub fn write_to(&self, dir: &Path, format: Format, body: &str) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let target = dir.join(format!("{}.{}", self.name, format.extension()));
        let tmp = dir.join(format!(".{}.{}.tmp", self.name, std::process::id()));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &target)
    }
}
