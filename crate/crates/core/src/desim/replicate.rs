use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run, SimConfig, SimMetrics, SimRun, TimeBin, TimeSeriesMetrics};
use crate::error::{invalid, Result};
use crate::workload::SeededStream;

/// Mean of a metric across replications with a normal-approximation 95% CI.
///
/// `stderr` and `ci95` are `None` for a single replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: Option<f64>,
    pub ci95: Option<(f64, f64)>,
    pub n: usize,
}

impl Summary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = if n == 0 { 0.0 } else { xs.iter().sum::<f64>() / n as f64 };
        if n < 2 {
            return Self {
                mean,
                stderr: None,
                ci95: None,
                n,
            };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        Self {
            mean,
            stderr: Some(se),
            ci95: Some((mean - 1.96 * se, mean + 1.96 * se)),
            n,
        }
    }

    pub fn ci_width(&self) -> Option<f64> {
        self.ci95.map(|(lo, hi)| hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub n_runs: usize,
    pub mean_wait: Summary,
    pub mean_wait_source: Summary,
    pub mean_wait_destination: Summary,
    pub mean_wait_delayed: Summary,
    pub mean_response: Summary,
    pub p95_response: Summary,
    pub utilization: Summary,
    pub little_l: Summary,
    pub migrated_fraction: Summary,
    pub runs: Vec<SimMetrics>,
    /// Bin-wise mean over runs, for the sinusoidal model.
    pub time_series: Option<TimeSeriesMetrics>,
}

/// Runs `n_runs` independent replications in parallel; replication `i` uses
/// `base.replication(i)`. Results are in replication order.
///
/// Only the first replication writes the event log, if one is configured.
pub fn replicate_runs(cfg: &SimConfig, n_runs: usize, base: SeededStream) -> Result<Vec<SimRun>> {
    if n_runs == 0 {
        return Err(invalid("n_runs", "need at least one replication"));
    }
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            if i == 0 || cfg.event_log.is_none() {
                run(cfg, base.replication(i as u64))
            } else {
                let mut quiet = cfg.clone();
                quiet.event_log = None;
                run(&quiet, base.replication(i as u64))
            }
        })
        .collect()
}

pub fn replicate(cfg: &SimConfig, n_runs: usize, base: SeededStream) -> Result<AggregateMetrics> {
    Ok(aggregate(&replicate_runs(cfg, n_runs, base)?))
}

/// Summaries across already-finished runs.
pub fn aggregate(runs: &[SimRun]) -> AggregateMetrics {
    let n_runs = runs.len();
    let metrics: Vec<SimMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
    let s = |f: fn(&SimMetrics) -> f64| Summary::from_samples(&metrics.iter().map(f).collect::<Vec<_>>());
    let series: Vec<&TimeSeriesMetrics> = runs.iter().filter_map(|r| r.time_series.as_ref()).collect();
    AggregateMetrics {
        n_runs,
        mean_wait: s(|m| m.mean_wait),
        mean_wait_source: s(|m| m.mean_wait_source),
        mean_wait_destination: s(|m| m.mean_wait_destination),
        mean_wait_delayed: s(|m| m.mean_wait_delayed),
        mean_response: s(|m| m.mean_response),
        p95_response: s(|m| m.p95_response),
        utilization: s(|m| m.utilization_observed),
        little_l: s(|m| m.little_l),
        migrated_fraction: s(SimMetrics::migrated_fraction),
        time_series: average_series(&series),
        runs: metrics,
    }
}

/// Bin-wise mean of per-run time series; per-run means are weighted equally.
fn average_series(series: &[&TimeSeriesMetrics]) -> Option<TimeSeriesMetrics> {
    let first = series.first()?;
    let n = series.len() as f64;
    let bins = (0..first.bins.len())
        .map(|b| TimeBin {
            t_center: first.bins[b].t_center,
            mean_wait: series.iter().map(|s| s.bins[b].mean_wait).sum::<f64>() / n,
            mean_rate: series.iter().map(|s| s.bins[b].mean_rate).sum::<f64>() / n,
            count: series.iter().map(|s| s.bins[b].count).sum(),
        })
        .collect();
    let rush_window = first.rush_window.map(|w| {
        let mut w = w;
        w.mean_wait = series.iter().filter_map(|s| s.rush_window).map(|r| r.mean_wait).sum::<f64>() / n;
        w.count = series.iter().filter_map(|s| s.rush_window).map(|r| r.count).sum();
        w
    });
    Some(TimeSeriesMetrics {
        period: first.period,
        bins,
        rush_window,
    })
}
