//! One report per command, rendered as text, JSON or CSV.

use serde_json::{Map, Value};

pub const SCHEMA: &str = "fi/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Scalar fields plus an optional table.
#[derive(Debug, Default)]
pub struct Report {
    fields: Vec<(String, Value)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    /// Replaces the default `key: value` text rendering.
    text: Option<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.fields.push((key.to_string(), v.into()));
        self
    }

    pub fn table(mut self, columns: Vec<&'static str>, rows: Vec<Vec<Value>>) -> Self {
        self.columns = columns;
        self.rows = rows;
        self
    }

    pub fn text(mut self, t: String) -> Self {
        self.text = Some(t);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema".into(), SCHEMA.into());
        for (k, v) in &self.fields {
            m.insert(k.clone(), v.clone());
        }
        if !self.columns.is_empty() {
            let rows = self
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .filter(|(_, v)| !v.is_null())
                            .map(|(c, v)| (c.to_string(), v.clone()))
                            .collect(),
                    )
                })
                .collect();
            m.insert("rows".into(), Value::Array(rows));
        }
        Value::Object(m)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json().to_string() + "\n",
            Format::Csv => self.render_csv(),
            Format::Text => self.render_text(),
        }
    }

    fn render_text(&self) -> String {
        if let Some(t) = &self.text {
            return t.clone() + "\n";
        }
        let mut out = String::new();
        for (k, v) in &self.fields {
            out += &format!("{k}: {}\n", plain(v));
        }
        if !self.columns.is_empty() {
            out += &self.columns.join(" ");
            out.push('\n');
            for r in &self.rows {
                out += &r.iter().map(plain).collect::<Vec<_>>().join(" ");
                out.push('\n');
            }
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        if self.columns.is_empty() {
            out += "key,value\n";
            for (k, v) in &self.fields {
                out += &format!("{k},{}\n", csv_cell(v));
            }
        } else {
            out += &self.columns.join(",");
            out.push('\n');
            for r in &self.rows {
                out += &r.iter().map(csv_cell).collect::<Vec<_>>().join(",");
                out.push('\n');
            }
        }
        out
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    let s = plain(v);
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}
