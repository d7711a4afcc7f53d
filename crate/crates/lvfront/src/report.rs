//! Run reports: pass/fail checks, CSV tables and one JSON summary per run.

use crate::config::ExperimentFile;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Version string written into every summary; bump on schema changes.
pub const SCHEMA: &str = "lvfront-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Error => 3,
        }
    }
}

/// Shortest round-trip form, in scientific notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// A CSV table. Cells are preformatted; numbers use the shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[j].parse().ok()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub operation: String,
    pub status: Status,
    pub checks: Vec<Check>,
    /// Solver error message when `status` is `error`.
    pub error: Option<String>,
    pub results: serde_json::Value,
    /// Table names; each is written as `<name>.csv` beside the summary.
    pub tables: Vec<String>,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub version: &'static str,
    #[serde(skip)]
    pub table_data: Vec<Table>,
}

impl Report {
    pub fn new(operation: &str, config: &ExperimentFile) -> Self {
        Self {
            schema: SCHEMA,
            operation: operation.into(),
            status: Status::Pass,
            checks: Vec::new(),
            error: None,
            results: serde_json::Value::Object(Default::default()),
            tables: Vec::new(),
            config: serde_json::to_value(config).expect("config serializes"),
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION"),
            table_data: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t.name.clone());
        self.table_data.push(t);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("result serializes");
        self.results
            .as_object_mut()
            .expect("results is an object")
            .insert(key.into(), v);
    }

    pub fn get_table(&self, name: &str) -> Option<&Table> {
        self.table_data.iter().find(|t| t.name == name)
    }

    /// Sets `status` from the checks unless an error was recorded.
    pub fn finish(mut self) -> Self {
        if self.error.is_none() {
            self.status = if self.checks.iter().all(|c| c.pass) {
                Status::Pass
            } else {
                Status::Fail
            };
        }
        self
    }

    pub fn failed(mut self, err: impl std::fmt::Display) -> Self {
        self.status = Status::Error;
        self.error = Some(err.to_string());
        self
    }

    /// Writes `summary.json` and the tables into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.table_data {
            let p = dir.join(format!("{}.csv", t.name));
            t.write_csv(&p)?;
            written.push(p);
        }
        let p = dir.join("summary.json");
        std::fs::write(&p, serde_json::to_string_pretty(self)?)?;
        written.push(p);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tag;
    use crate::periodic_fn::example_family;

    #[test]
    fn status_and_files() {
        let cfg = ExperimentFile::new(Tag::SpeedSweep, example_family(3.5, 12.0, 0.0, 1.0).unwrap());
        let mut r = Report::new("speed", &cfg);
        let mut t = Table::new("speeds", &["T", "c"]);
        t.push_nums(&[0.1, -0.25]);
        r.table(t);
        r.check(Check::new("a", true, ""));
        assert_eq!(r.clone().finish().status, Status::Pass);
        r.check(Check::new("b", false, ""));
        let r = r.finish();
        assert_eq!(r.status.exit_code(), 2);
        assert_eq!(r.get_table("speeds").unwrap().column("c").unwrap(), vec![-0.25]);
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("speeds.csv")).unwrap();
        assert_eq!(csv, "T,c\n0.1,-0.25\n");
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["status"], "fail");
        assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(json["tables"][0], "speeds");
        assert_eq!(Report::new("x", &cfg).failed("boom").status.exit_code(), 3);
        assert_eq!(num(1.5e-7), "1.5e-7");
        assert_eq!(num(-0.25), "-0.25");
        assert_eq!("1.5e-7".parse::<f64>().unwrap(), 1.5e-7);
    }
}
