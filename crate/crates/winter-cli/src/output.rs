use crate::config::{fmt_g, Format, RunConfig};
use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;

/// A column-oriented result table with the config it came from.
pub struct Table {
    pub title: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub extra_metadata: Vec<String>,
}

impl Table {
    pub fn new(title: &'static str, columns: Vec<&'static str>) -> Table {
        Table {
            title,
            columns,
            rows: Vec::new(),
            extra_metadata: Vec::new(),
        }
    }

    fn render_csv(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!("# winter {}\n", self.title));
        for line in config.metadata_lines() {
            out.push_str(&format!("# {line}\n"));
        }
        for line in &self.extra_metadata {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_g(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self, config: &RunConfig) -> String {
        let mut doc = serde_json::Map::new();
        doc.insert("title".into(), self.title.into());
        let mut cfg = serde_json::Map::new();
        for line in config.metadata_lines().iter().chain(&self.extra_metadata) {
            if let Some((k, v)) = line.split_once(" = ") {
                cfg.insert(k.to_string(), v.into());
            }
        }
        doc.insert("config".into(), serde_json::Value::Object(cfg));
        doc.insert(
            "columns".into(),
            serde_json::Value::Array(self.columns.iter().map(|c| (*c).into()).collect()),
        );
        doc.insert(
            "rows".into(),
            serde_json::Value::Array(
                self.rows
                    .iter()
                    .map(|row| {
                        serde_json::Value::Array(
                            row.iter()
                                .map(|v| {
                                    serde_json::Number::from_f64(*v)
                                        .map(serde_json::Value::Number)
                                        .unwrap_or(serde_json::Value::Null)
                                })
                                .collect(),
                        )
                    })
                    .collect(),
            ),
        );
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).unwrap();
        text.push('\n');
        text
    }

    pub fn render(&self, config: &RunConfig) -> String {
        match config.format {
            Format::Csv => self.render_csv(config),
            Format::Json => self.render_json(config),
        }
    }
}

pub fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("cannot write to stdout")
        }
    }
}

/// For multi-file outputs (one snapshot per time): inserts `_{index}`
/// before the extension.
pub fn indexed_path(path: &Path, index: usize) -> std::path::PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{index}"),
    };
    path.with_file_name(name)
}
