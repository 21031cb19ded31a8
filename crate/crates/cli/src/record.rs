//! Machine-readable results: a [`ResultRecord`] for single experiments and
//! a [`Table`] for grids. Timings are kept apart from everything else so
//! that reruns can be compared byte for byte with them stripped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub metrics: BTreeMap<String, Metric>,
    /// Structured outputs that are not scalars (anchor lists, curves, rows).
    #[serde(default)]
    pub data: BTreeMap<String, serde_json::Value>,
    /// Seconds per stage.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timings: BTreeMap<String, f64>,
    pub pass: BTreeMap<String, bool>,
}

impl ResultRecord {
    pub fn new(experiment: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(ResultRecord {
            experiment: experiment.to_string(),
            seed,
            config: serde_json::to_value(config)?,
            metrics: BTreeMap::new(),
            data: BTreeMap::new(),
            timings: BTreeMap::new(),
            pass: BTreeMap::new(),
        })
    }

    /// Non-finite values cannot be represented in JSON; they are recorded
    /// under `data` as strings instead.
    pub fn metric(&mut self, name: &str, value: f64) {
        self.metric_with(name, value, None);
    }

    pub fn metric_se(&mut self, name: &str, value: f64, stderr: f64) {
        self.metric_with(name, value, Some(stderr));
    }

    fn metric_with(&mut self, name: &str, value: f64, stderr: Option<f64>) {
        if value.is_finite() && stderr.is_none_or(f64::is_finite) {
            self.metrics.insert(name.to_string(), Metric { value, stderr });
        } else {
            self.data.insert(name.to_string(), serde_json::Value::String(value.to_string()));
        }
    }

    pub fn data(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.data.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn timing(&mut self, name: &str, seconds: f64) {
        self.timings.insert(name.to_string(), seconds);
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.pass.insert(name.to_string(), ok);
    }

    pub fn all_pass(&self) -> bool {
        self.pass.values().all(|&p| p)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Flat `kind,name,value,stderr` rows.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["kind", "name", "value", "stderr"]);
        for (k, m) in &self.metrics {
            t.push(vec![
                "metric".into(),
                k.clone(),
                m.value.to_string(),
                m.stderr.map(|s| s.to_string()).unwrap_or_default(),
            ]);
        }
        for (k, v) in &self.pass {
            t.push(vec!["pass".into(), k.clone(), v.to_string(), String::new()]);
        }
        for (k, v) in &self.timings {
            t.push(vec!["timing".into(), k.clone(), v.to_string(), String::new()]);
        }
        t
    }
}

/// A rectangular table of strings with a header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Drops the named columns.
    pub fn without(&self, columns: &[&str]) -> Table {
        let keep: Vec<usize> = (0..self.header.len())
            .filter(|&i| !columns.contains(&self.header[i].as_str()))
            .collect();
        Table {
            header: keep.iter().map(|&i| self.header[i].clone()).collect(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&i| r[i].clone()).collect()).collect(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(&self.header)?;
        for r in &self.rows {
            wtr.write_record(r)?;
        }
        let bytes = wtr.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Table> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    /// An array of `{column: value}` objects.
    pub fn to_json(&self) -> Result<String> {
        let objs: Vec<BTreeMap<&str, &str>> = self
            .rows
            .iter()
            .map(|r| self.header.iter().map(String::as_str).zip(r.iter().map(String::as_str)).collect())
            .collect();
        let mut s = serde_json::to_string_pretty(&objs)?;
        s.push('\n');
        Ok(s)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}
