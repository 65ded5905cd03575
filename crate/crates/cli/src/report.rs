use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Environment variable that enables real wall-clock timing in reports.
/// Off by default so that identical invocations produce identical bytes.
pub const WALL_TIME_ENV: &str = "ITRD_WALL_TIME";

/// Machine-readable result of one command. Keys serialize in sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub results: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<BTreeMap<String, Vec<f64>>>,
    pub wall_time_s: f64,
}

impl MetricsReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            config: BTreeMap::new(),
            results: BTreeMap::new(),
            series: None,
            wall_time_s: 0.0,
        }
    }

    pub fn config(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.config.insert(key.to_owned(), value.into());
        self
    }

    pub fn result(mut self, key: &str, value: f64) -> Self {
        self.results.insert(key.to_owned(), value);
        self
    }

    pub fn series(mut self, key: &str, values: Vec<f64>) -> Self {
        self.series
            .get_or_insert_with(BTreeMap::new)
            .insert(key.to_owned(), values);
        self
    }

    /// Records `seconds` only when [`WALL_TIME_ENV`] is set to `1`.
    pub fn timed(mut self, seconds: f64) -> Self {
        if std::env::var(WALL_TIME_ENV).is_ok_and(|v| v == "1") {
            self.wall_time_s = seconds;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
