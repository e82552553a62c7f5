//! Key-value run manifests: sorted `key = value` lines, one per entry.

use std::collections::BTreeMap;
use std::path::Path;

use crate::util::{atomic_write, data, read_file, CliError};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new() -> Manifest {
        let mut m = Manifest::default();
        m.set("tool_version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_owned(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| data(format!("manifest is missing key {:?}", key)))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Manifest, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| data(format!("manifest line {}: expected 'key = value'", i + 1)))?;
            entries.insert(k.trim().to_owned(), v.to_owned());
        }
        Ok(Manifest { entries })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        atomic_write(path, &self.render())
    }

    pub fn read(path: &Path) -> Result<Manifest, CliError> {
        Manifest::parse(&read_file(path)?)
    }
}
