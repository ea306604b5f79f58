use std::fmt::Write as _;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// What a command produces: a table of rows or a single JSON document.
pub enum Report {
    Table {
        header: &'static [&'static str],
        rows: Vec<Vec<Value>>,
    },
    Object(Value),
}

impl Report {
    fn natural_format(&self) -> Format {
        match self {
            Report::Table { .. } => Format::Csv,
            Report::Object(_) => Format::Json,
        }
    }

    pub fn render(&self, format: Option<Format>) -> String {
        match (self, format.unwrap_or(self.natural_format())) {
            (Report::Table { header, rows }, Format::Csv) => {
                let mut out = header.join(",");
                out.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(cell).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            (Report::Table { header, rows }, Format::Json) => {
                let records: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        let map: Map<String, Value> = header
                            .iter()
                            .zip(row)
                            .map(|(k, v)| (k.to_string(), v.clone()))
                            .collect();
                        Value::Object(map)
                    })
                    .collect();
                pretty(&Value::Array(records))
            }
            (Report::Object(v), Format::Json) => pretty(v),
            (Report::Object(v), Format::Csv) => {
                let mut flat = Vec::new();
                flatten("", v, &mut flat);
                let header: Vec<&str> = flat.iter().map(|(k, _)| k.as_str()).collect();
                let values: Vec<&str> = flat.iter().map(|(_, v)| v.as_str()).collect();
                format!("{}\n{}\n", header.join(","), values.join(","))
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// Nested keys become dotted column names.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    let mut key = String::with_capacity(prefix.len() + k.len() + 1);
                    let _ = write!(key, "{prefix}.{k}");
                    key
                };
                flatten(&key, child, out);
            }
        }
        leaf => out.push((prefix.to_string(), cell(leaf))),
    }
}
