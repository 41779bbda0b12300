//! Artifact files. Each one starts with the schema line and the resolved
//! configuration; the optional timestamp sits on its own line.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::config::Resolved;

pub const SCHEMA: &str = "fblab/1";

pub struct Writer<'a> {
    pub dir: PathBuf,
    pub subcommand: &'a str,
    pub config: &'a Resolved,
    pub timestamp: bool,
    pub written: Vec<PathBuf>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl<'a> Writer<'a> {
    pub fn new(dir: &Path, subcommand: &'a str, config: &'a Resolved, timestamp: bool) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer { dir: dir.to_path_buf(), subcommand, config, timestamp, written: Vec::new() })
    }

    fn put(&mut self, name: &str, text: String) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    /// Comment preamble followed by the table.
    pub fn csv(&mut self, name: &str, table: &str) -> std::io::Result<()> {
        let mut out = format!("# schema: {SCHEMA}\n# subcommand: {}\n", self.subcommand);
        if self.timestamp {
            out.push_str(&format!("# generated: {}\n", unix_now()));
        }
        for (k, v) in self.config.entries() {
            out.push_str(&format!("# config: {k} = {v}\n"));
        }
        out.push_str(table);
        if !table.ends_with('\n') {
            out.push('\n');
        }
        self.put(name, out)
    }

    /// `{schema, subcommand, [generated], config, result}`.
    pub fn json(&mut self, name: &str, result: Value) -> std::io::Result<()> {
        let config: Map<String, Value> = self.config.entries().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let mut doc = Map::new();
        doc.insert("schema".into(), json!(SCHEMA));
        doc.insert("subcommand".into(), json!(self.subcommand));
        if self.timestamp {
            doc.insert("generated".into(), json!(unix_now()));
        }
        doc.insert("config".into(), Value::Object(config));
        doc.insert("result".into(), result);
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).map_err(std::io::Error::other)?;
        text.push('\n');
        self.put(name, text)
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        let mut out = format!("# schema: {SCHEMA}\n# subcommand: {}\n", self.subcommand);
        if self.timestamp {
            out.push_str(&format!("# generated: {}\n", unix_now()));
        }
        out.push_str(body);
        self.put(name, out)
    }
}
