use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::{OutputFormat, ScenarioReport};
use crate::error::{Error, Result};

/// `x` rounded to nine significant digits, without trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// `{scenario}_{unix seconds}`, or just `{scenario}` when `deterministic`.
pub fn report_file_stem(name: &str, deterministic: bool) -> String {
    if deterministic {
        name.to_string()
    } else {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        format!("{name}_{secs}")
    }
}

fn io(path: &Path, e: impl ToString) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// One row per grid point; parameter and extra columns are the union over
/// rows, in name order.
pub fn write_csv(report: &ScenarioReport, path: &Path) -> Result<()> {
    let params: BTreeSet<&String> = report.rows.iter().flat_map(|r| r.params.keys()).collect();
    let extras: BTreeSet<&String> = report.rows.iter().flat_map(|r| r.extra.keys()).collect();
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(params.iter().map(|p| p.to_string()));
    header.extend(
        ["metric", "analytic_value", "sim_value", "sim_ci", "abs_err", "rel_err"]
            .iter()
            .map(|s| s.to_string()),
    );
    header.extend(extras.iter().map(|e| e.to_string()));
    header.extend(["status".to_string(), "note".to_string()]);
    w.write_record(&header).map_err(|e| io(path, e))?;
    for row in &report.rows {
        let mut rec = vec![row.index.to_string()];
        rec.extend(params.iter().map(|p| opt(row.params.get(*p).copied())));
        rec.push(row.metric.clone());
        rec.extend([row.analytic_value, row.sim_value, row.sim_ci, row.abs_err, row.rel_err].map(opt));
        rec.extend(extras.iter().map(|e| opt(row.extra.get(*e).copied())));
        rec.push(row.status.as_str().into());
        rec.push(row.note.clone().unwrap_or_default());
        w.write_record(&rec).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

pub fn write_json(report: &ScenarioReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io(path, e))
}

/// Writes the report in each of `formats` under `dir`, returning the paths.
pub fn write_report(
    report: &ScenarioReport,
    dir: &Path,
    formats: &[OutputFormat],
    deterministic_names: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let stem = report_file_stem(&report.scenario.name, deterministic_names);
    formats
        .iter()
        .map(|f| {
            let path = match f {
                OutputFormat::Csv => dir.join(format!("{stem}.csv")),
                OutputFormat::Json => dir.join(format!("{stem}.json")),
            };
            match f {
                OutputFormat::Csv => write_csv(report, &path)?,
                OutputFormat::Json => write_json(report, &path)?,
            }
            Ok(path)
        })
        .collect()
}
