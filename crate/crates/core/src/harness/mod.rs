//! Scenario sweeps that pair closed-form predictions with simulation
//! estimates and write comparison tables.

mod models;
mod output;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::desim::RushStatistic;
use crate::error::{Error, Result};

pub use models::{table_rush_hour, RushHourParams};
pub use output::{fmt_sig, report_file_stem, write_csv, write_json, write_report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioModel {
    /// Edge queue with migration: mean wait, analytic vs simulated.
    TwoPhase,
    /// Edge vs cloud mean response with network round trips.
    Mobility,
    /// Rush-hour wait of the sinusoidal model against the fluid estimate.
    RushHour,
    /// Excess wait caused by sinusoidal modulation.
    Excess,
    /// Edge server-size sweep against a pooled cloud on a synthetic trace.
    Packing,
}

impl ScenarioModel {
    /// Parameters the model accepts, with defaults where one exists.
    pub fn parameters(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            Self::TwoPhase => &[
                ("lambda", None),
                ("mu1", None),
                ("mu2", None),
                ("r", None),
                ("requests", Some(200_000.0)),
                ("warmup", Some(0.1)),
            ],
            Self::Mobility => &[
                ("lambda", None),
                ("mu1", None),
                ("mu2", None),
                ("r", None),
                ("t_edge", None),
                ("t_cloud", None),
                ("k", Some(100.0)),
                ("mu_cloud", None),
                ("requests", Some(200_000.0)),
                ("warmup", Some(0.1)),
            ],
            Self::RushHour => &[
                ("amplitude", None),
                ("lambda_bar", None),
                ("mu1", None),
                ("mu2", None),
                ("r", None),
                ("gamma", None),
                ("period", None),
                ("scale", Some(1.0)),
                ("periods", Some(21.0)),
                ("warmup", Some(0.1)),
            ],
            Self::Excess => &[
                ("amplitude", None),
                ("rho", None),
                ("mu_eff", None),
                ("gamma", None),
                ("period", None),
                ("periods", Some(20.0)),
                ("warmup", Some(0.1)),
            ],
            Self::Packing => &[
                ("edge_cores", None),
                ("count", Some(100_000.0)),
                ("rho", Some(0.9)),
                ("cloud_servers", Some(1000.0)),
                ("cloud_cores", Some(64.0)),
                ("k_sites", Some(1000.0)),
                ("q", Some(2.0)),
                ("mean_lifetime", Some(1.0)),
                ("tolerance", Some(0.01)),
            ],
        }
    }

    fn metric(self) -> &'static str {
        match self {
            Self::TwoPhase => "mean_wait",
            Self::Mobility => "response_gap",
            Self::RushHour => "rush_wait",
            Self::Excess => "excess_wait",
            Self::Packing => "relative_error_vs_cloud",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_replications() -> usize {
    30
}

/// A named sweep: every combination of the `grid` lists, with `fixed`
/// values shared by all points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ScenarioModel,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    pub grid: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rush_statistic: RushStatistic,
    #[serde(default)]
    pub outputs: Vec<OutputFormat>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "scenario name {:?} is not a valid file stem",
                self.name
            )));
        }
        if self.grid.is_empty() || self.grid.values().any(Vec::is_empty) {
            return Err(Error::Config(format!(
                "scenario {}: grid must list at least one value per parameter",
                self.name
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config(format!("scenario {}: replications must be >= 1", self.name)));
        }
        let known = self.model.parameters();
        for key in self.grid.keys().chain(self.fixed.keys()) {
            if !known.iter().any(|(k, _)| k == key) {
                return Err(Error::Config(format!(
                    "scenario {}: unknown parameter {key:?} for {:?}",
                    self.name, self.model
                )));
            }
            if self.grid.contains_key(key) && self.fixed.contains_key(key) {
                return Err(Error::Config(format!(
                    "scenario {}: {key:?} is both fixed and swept",
                    self.name
                )));
            }
        }
        for (key, default) in known {
            let given = self.grid.contains_key(*key) || self.fixed.contains_key(*key);
            let optional = default.is_some() || matches!(*key, "gamma" | "period");
            if !given && !optional {
                return Err(Error::Config(format!("scenario {}: missing parameter {key:?}", self.name)));
            }
        }
        if matches!(self.model, ScenarioModel::RushHour | ScenarioModel::Excess) {
            let has = |k: &str| self.grid.contains_key(k) || self.fixed.contains_key(k);
            if has("gamma") == has("period") {
                return Err(Error::Config(format!(
                    "scenario {}: give exactly one of gamma or period",
                    self.name
                )));
            }
        }
        if self.model == ScenarioModel::Packing && self.grid.iter().any(|(k, v)| k != "edge_cores" && v.len() > 1) {
            return Err(Error::Config(format!(
                "scenario {}: packing sweeps only edge_cores",
                self.name
            )));
        }
        Ok(())
    }

    /// Grid points in row order: the last key in name order varies fastest.
    pub fn points(&self) -> Vec<BTreeMap<String, f64>> {
        let mut points = vec![self.fixed.clone()];
        for (key, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut p = p.clone();
                        p.insert(key.clone(), v);
                        p
                    })
                })
                .collect();
        }
        for p in &mut points {
            for (key, default) in self.model.parameters() {
                if let Some(d) = default {
                    p.entry((*key).to_string()).or_insert(*d);
                }
            }
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// The point violates a model precondition, e.g. an unstable queue.
    Skipped,
    Error,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Skipped => "skipped",
            Self::Error => "error",
        }
    }
}

/// One grid point's analytic value next to its simulated estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub index: usize,
    pub params: BTreeMap<String, f64>,
    pub metric: String,
    pub analytic_value: Option<f64>,
    pub sim_value: Option<f64>,
    /// Half-width of the 95% confidence interval across replications.
    pub sim_ci: Option<f64>,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    /// Model-specific columns.
    pub extra: BTreeMap<String, f64>,
    pub status: RowStatus,
    pub note: Option<String>,
}

impl ComparisonRow {
    fn new(index: usize, params: BTreeMap<String, f64>, metric: &str) -> Self {
        Self {
            index,
            params,
            metric: metric.to_string(),
            analytic_value: None,
            sim_value: None,
            sim_ci: None,
            abs_err: None,
            rel_err: None,
            extra: BTreeMap::new(),
            status: RowStatus::Ok,
            note: None,
        }
    }

    /// Sets the values and derives the error columns.
    pub fn set_values(&mut self, analytic: Option<f64>, sim: Option<f64>, ci: Option<f64>) {
        self.analytic_value = analytic;
        self.sim_value = sim;
        self.sim_ci = ci;
        self.abs_err = analytic.zip(sim).map(|(a, s)| (a - s).abs());
        self.rel_err = self.abs_err.zip(analytic).and_then(|(e, a)| (a != 0.0).then(|| e / a.abs()));
    }

    fn fail(&mut self, err: &Error) {
        self.status = match err {
            Error::UnstableQueue { .. } | Error::OverloadedInstant { .. } | Error::InvalidParameter { .. } | Error::Domain(_) => {
                RowStatus::Skipped
            }
            _ => RowStatus::Error,
        };
        self.note = Some(err.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub rows: Vec<ComparisonRow>,
}

/// Evaluates every grid point, in parallel, keeping grid order.
///
/// A failing point becomes a `skipped` or `error` row; only an invalid
/// scenario fails the whole call.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport> {
    scenario.validate()?;
    let points = scenario.points();
    let metric = scenario.model.metric();
    let rows = if scenario.model == ScenarioModel::Packing {
        models::packing_rows(scenario, points, metric)
    } else {
        points
            .into_par_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut row = ComparisonRow::new(i, p, metric);
                if let Err(e) = models::evaluate(scenario, &mut row) {
                    row.fail(&e);
                }
                row
            })
            .collect()
    };
    Ok(ScenarioReport {
        scenario: scenario.clone(),
        rows,
    })
}
