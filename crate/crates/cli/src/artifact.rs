use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

/// Environment variable naming the artifact root directory.
pub const OUTPUT_ENV: &str = "RLFA_OUTPUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "rlfa-output";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// A CSV table held in memory until the artifact is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    /// Parses CSV bytes produced by one of the core writers.
    pub fn from_csv(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table {
            name: name.to_string(),
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Assertions {
    pub passed: usize,
    pub total: usize,
}

impl Assertions {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

/// Scalar results of a run; `headline` is the metric sweeps aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub headline: String,
    pub value: f64,
    pub values: BTreeMap<String, Value>,
}

impl Summary {
    pub fn new(headline: &str, value: f64) -> Self {
        Summary {
            headline: headline.to_string(),
            value,
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.values.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub config: Value,
    pub seed: u64,
    pub summary: Summary,
    pub tables: Vec<Table>,
    pub assertions: Option<Assertions>,
    pub wall_time_seconds: f64,
}

impl RunArtifact {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn metadata(&self) -> Value {
        let started = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        json!({
            "config": self.config,
            "seed": self.seed,
            "versions": versions(),
            "wall_time_seconds": self.wall_time_seconds,
            "written_at_unix": started,
            "summary": self.summary,
            "assertions": self.assertions,
            "tables": self.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        })
    }

    /// Writes `metadata.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for t in &self.tables {
            fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
        }
        let meta = serde_json::to_string_pretty(&self.metadata()).expect("metadata serializes");
        fs::write(dir.join("metadata.json"), meta + "\n")?;
        Ok(())
    }
}

pub fn versions() -> Value {
    json!({
        "rlfa-cli": env!("CARGO_PKG_VERSION"),
        "rlfa-core": rlfa_core::VERSION,
    })
}
