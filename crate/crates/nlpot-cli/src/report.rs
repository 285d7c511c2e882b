//! JSON report envelope: every run records the grid spacing, regularization,
//! tolerances, and seed it used, so no default is silent.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub scenario: String,
    pub grid_h: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub threads: usize,
    pub tolerances: BTreeMap<String, f64>,
}

impl ReportMeta {
    pub fn new(scenario: &str, seed: u64, threads: usize) -> ReportMeta {
        ReportMeta {
            scenario: scenario.to_string(),
            grid_h: None,
            epsilon: None,
            seed,
            threads,
            tolerances: BTreeMap::new(),
        }
    }

    pub fn with_grid(mut self, h: f64) -> Self {
        self.grid_h = Some(h);
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub meta: ReportMeta,
    pub body: T,
}

pub fn write_report<T: Serialize>(path: &Path, meta: ReportMeta, body: T) -> io::Result<()> {
    let report = Report { meta, body };
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(path, text + "\n")
}
