//! `result.json` and `sweep.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentName, Resolved};
use crate::LabError;

/// One measured quantity at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Record {
    pub params: BTreeMap<String, Value>,
    pub value: f64,
    pub tail_estimate: Option<f64>,
    /// Seconds; the only field allowed to differ between identical runs.
    pub wall_time: f64,
}

impl Record {
    pub fn new<const N: usize>(params: [(&str, Value); N], value: f64, tail: Option<f64>, started: Instant) -> Self {
        Self {
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            value,
            tail_estimate: tail,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }
}

/// One acceptance threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: Value,
    pub expected: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: impl Into<Value>, expected: impl Into<String>, passed: bool) -> Self {
        Self { name: name.into(), observed: observed.into(), expected: expected.into(), passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub experiment: ExperimentName,
    pub config: Resolved,
    pub records: Vec<Record>,
    /// Derived statistics such as fitted slopes.
    pub summary: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(config: Resolved) -> Self {
        Self { experiment: config.experiment, config, records: Vec::new(), summary: BTreeMap::new(), checks: Vec::new(), passed: true }
    }

    pub fn check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Writes `result.json` and `sweep.csv` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<(), LabError> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self)?;
        fs::write(dir.join("result.json"), json + "\n")?;
        self.write_csv(&dir.join("sweep.csv"))
    }

    /// One row per record; columns are the union of parameter names, then
    /// `value` and `tailEstimate`. Wall time is left out so the file is
    /// reproducible byte for byte.
    fn write_csv(&self, path: &Path) -> Result<(), LabError> {
        let mut columns: Vec<&str> = Vec::new();
        for r in &self.records {
            for k in r.params.keys() {
                if !columns.contains(&k.as_str()) {
                    columns.push(k);
                }
            }
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = columns.clone();
        header.extend(["value", "tailEstimate"]);
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = columns
                .iter()
                .map(|c| match r.params.get(*c) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            row.push(r.value.to_string());
            row.push(r.tail_estimate.map(|t| t.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
