use std::path::Path;

use anyhow::{Context, Result};
use edgeq_core::desim::{SimMetrics, TimeSeriesMetrics};
use edgeq_core::harness::{fmt_sig, ComparisonRow, Scenario};
use serde_json::{Map, Value};

/// Ordered `key = value` output, or a JSON object with `--json`.
#[derive(Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn num(&mut self, key: &str, v: f64) {
        self.entries
            .push((key.into(), serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)));
    }

    pub fn text(&mut self, key: &str, v: &str) {
        self.entries.push((key.into(), Value::String(v.into())));
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        self.entries.push((key.into(), Value::Bool(v)));
    }

    pub fn print(&self, json: bool) {
        if json {
            let mut map = Map::new();
            for (k, v) in &self.entries {
                match map.get_mut(k) {
                    Some(Value::Array(a)) => a.push(v.clone()),
                    Some(prev) => *prev = Value::Array(vec![prev.clone(), v.clone()]),
                    None => {
                        map.insert(k.clone(), v.clone());
                    }
                }
            }
            println!("{}", serde_json::to_string_pretty(&Value::Object(map)).expect("plain values"));
            return;
        }
        for (k, v) in &self.entries {
            let shown = match v {
                Value::Number(n) => fmt_sig(n.as_f64().expect("finite")),
                Value::Null => "NaN".into(),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            println!("{k} = {shown}");
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_else(|| "-".into())
}

/// Tab-separated table of the swept parameters and comparison columns.
pub fn print_rows(scenario: &Scenario, rows: &[ComparisonRow]) {
    let swept: Vec<&String> = scenario.grid.keys().collect();
    let mut header: Vec<String> = swept.iter().map(|s| s.to_string()).collect();
    header.extend(["analytic", "sim", "sim_ci", "abs_err", "rel_err", "status"].map(String::from));
    println!("{}", header.join("\t"));
    for row in rows {
        let mut cells: Vec<String> = swept.iter().map(|k| opt(row.params.get(*k).copied())).collect();
        cells.extend([row.analytic_value, row.sim_value, row.sim_ci, row.abs_err, row.rel_err].map(opt));
        cells.push(row.status.as_str().into());
        println!("{}", cells.join("\t"));
    }
}

pub fn write_metrics_csv(path: &Path, runs: &[SimMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for m in runs {
        w.serialize(m)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_csv(path: &Path, ts: &TimeSeriesMetrics) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for b in &ts.bins {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}
