use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{run_scenario, ComparisonRow, Scenario, ScenarioModel};
use crate::analytic::{
    delta_t_bound_mmk, effective_service_rate, excess_wait_sinusoidal, fluid_backlog, mm1_two_phase_wait, mmk_exact_wait,
    rush_hour_wait, CloudSpec, NetworkSpec, QueueSpec, SinusoidProfile,
};
use crate::capacity::{edge_size_sweep, generate_synthetic_trace, Policy, SiteAssign, SyntheticTraceSpec, Topology};
use crate::desim::{replicate, replicate_runs, RushStatistic, SimConfig, Summary};
use crate::error::{invalid, Result};
use crate::workload::SeededStream;

const POINT_STRIDE: u64 = 1_000_000;

fn get(row: &ComparisonRow, name: &'static str) -> Result<f64> {
    row.params.get(name).copied().ok_or_else(|| invalid(name, "missing"))
}

fn count(row: &ComparisonRow, name: &'static str) -> Result<u64> {
    let v = get(row, name)?;
    if !(v >= 1.0 && v.fract() == 0.0 && v < 2f64.powi(53)) {
        return Err(invalid(name, format!("must be a positive integer, got {v}")));
    }
    Ok(v as u64)
}

fn gamma(row: &ComparisonRow) -> Result<f64> {
    match (row.params.get("gamma"), row.params.get("period")) {
        (Some(&g), None) => Ok(g),
        (None, Some(&p)) => Ok(TAU / p),
        _ => Err(invalid("gamma", "give exactly one of gamma or period")),
    }
}

fn half(s: &Summary) -> Option<f64> {
    s.ci_width().map(|w| w / 2.0)
}

fn stream(scenario: &Scenario, row: &ComparisonRow, offset: u64) -> SeededStream {
    SeededStream::new(scenario.seed, row.index as u64 * POINT_STRIDE + offset)
}

pub(super) fn evaluate(scenario: &Scenario, row: &mut ComparisonRow) -> Result<()> {
    let reps = scenario.replications;
    match scenario.model {
        ScenarioModel::TwoPhase => {
            let spec = QueueSpec::new(get(row, "lambda")?, get(row, "mu1")?, get(row, "mu2")?, get(row, "r")?)?;
            let analytic = mm1_two_phase_wait(&spec)?;
            let cfg = SimConfig::two_phase(&spec, count(row, "requests")?)?.with_warmup(get(row, "warmup")?);
            let agg = replicate(&cfg, reps, stream(scenario, row, 0))?;
            row.set_values(Some(analytic.total()), Some(agg.mean_wait.mean), half(&agg.mean_wait));
            row.extra.insert("analytic_source".into(), analytic.source);
            row.extra.insert("analytic_destination".into(), analytic.destination);
            row.extra.insert("sim_source".into(), agg.mean_wait_source.mean);
            row.extra.insert("sim_destination".into(), agg.mean_wait_destination.mean);
        }
        ScenarioModel::Mobility => {
            let lambda = get(row, "lambda")?;
            let spec = QueueSpec::new(lambda, get(row, "mu1")?, get(row, "mu2")?, get(row, "r")?)?;
            let net = NetworkSpec::new(get(row, "t_edge")?, get(row, "t_cloud")?)?;
            let k = u32::try_from(count(row, "k")?).map_err(|_| invalid("k", "too large"))?;
            let cloud = CloudSpec::for_load(k, get(row, "mu_cloud")?, f64::from(k) * lambda)?;
            let bound = delta_t_bound_mmk(&spec, &cloud)?;
            let edge_analytic = net.t_edge + mm1_two_phase_wait(&spec)?.total() + spec.mean_service();
            let cloud_analytic = net.t_cloud + mmk_exact_wait(&cloud)? + 1.0 / cloud.mu_cloud;

            let requests = count(row, "requests")?;
            let warmup = get(row, "warmup")?;
            let edge_cfg = SimConfig::two_phase(&spec, requests)?.with_warmup(warmup).with_network(net);
            let cloud_cfg = SimConfig::mmk(&cloud, requests)?.with_warmup(warmup).with_network(net);
            let edge = replicate(&edge_cfg, reps, stream(scenario, row, 0))?;
            let cloud_sim = replicate(&cloud_cfg, reps, stream(scenario, row, POINT_STRIDE / 2))?;
            let ci = edge
                .mean_response
                .stderr
                .zip(cloud_sim.mean_response.stderr)
                .map(|(a, b)| 1.96 * a.hypot(b));
            row.set_values(
                Some(edge_analytic - cloud_analytic),
                Some(edge.mean_response.mean - cloud_sim.mean_response.mean),
                ci,
            );
            row.extra.insert("edge_response_analytic".into(), edge_analytic);
            row.extra.insert("cloud_response_analytic".into(), cloud_analytic);
            row.extra.insert("edge_response_sim".into(), edge.mean_response.mean);
            row.extra.insert("cloud_response_sim".into(), cloud_sim.mean_response.mean);
            row.extra.insert("delta_t".into(), net.delta_t());
            row.extra.insert("delta_t_bound".into(), bound);
        }
        ScenarioModel::RushHour => {
            let scale = get(row, "scale")?;
            let (mu1, mu2, r) = (get(row, "mu1")? * scale, get(row, "mu2")? * scale, get(row, "r")?);
            let profile = SinusoidProfile::new(get(row, "lambda_bar")? * scale, get(row, "amplitude")?, gamma(row)?)?;
            let mu_eff = effective_service_rate(mu1, mu2, r)?;
            let fluid = rush_hour_wait(&profile, mu_eff)?;
            let periods = u32::try_from(count(row, "periods")?).map_err(|_| invalid("periods", "too large"))?;
            let mut cfg = SimConfig::mtm1_two_stage(&profile, mu1, mu2, r, periods)?.with_warmup(get(row, "warmup")?);
            cfg.time_series.rush_statistic = scenario.rush_statistic;
            let runs = replicate_runs(&cfg, reps, stream(scenario, row, 0))?;
            let waits = Summary::from_samples(&runs.iter().map(|r| r.metrics.mean_wait).collect::<Vec<_>>());
            let rush: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.time_series.as_ref()?.rush_window.map(|w| w.mean_wait))
                .collect();
            row.extra.insert("mu_eff".into(), mu_eff);
            row.extra.insert("mean_wait_sim".into(), waits.mean);
            if let Some(ci) = half(&waits) {
                row.extra.insert("mean_wait_sim_ci".into(), ci);
            }
            if rush.is_empty() {
                row.set_values(Some(fluid), None, None);
                row.note = Some("no overload window".into());
            } else {
                let s = Summary::from_samples(&rush);
                row.set_values(Some(fluid), Some(s.mean), half(&s));
                let rh = fluid_backlog(&profile, mu_eff)?;
                row.extra.insert("t1".into(), rh.window.t1);
                row.extra.insert("t2".into(), rh.window.t2);
                row.extra.insert("backlog".into(), rh.backlog);
            }
        }
        ScenarioModel::Excess => {
            let (rho, mu, amplitude) = (get(row, "rho")?, get(row, "mu_eff")?, get(row, "amplitude")?);
            let g = gamma(row)?;
            let analytic = excess_wait_sinusoidal(rho, amplitude, g, mu)?;
            let profile = SinusoidProfile::new(rho * mu, amplitude, g)?;
            let periods = u32::try_from(count(row, "periods")?).map_err(|_| invalid("periods", "too large"))?;
            let cfg = SimConfig::mtm1(&profile, mu, periods)?.with_warmup(get(row, "warmup")?);
            let agg = replicate(&cfg, reps, stream(scenario, row, 0))?;
            let stationary = rho / (mu * (1.0 - rho));
            row.set_values(Some(analytic), Some(agg.mean_wait.mean - stationary), half(&agg.mean_wait));
            row.extra.insert("mean_wait_sim".into(), agg.mean_wait.mean);
            row.extra.insert("stationary_wait".into(), stationary);
        }
        ScenarioModel::Packing => unreachable!("packing rows are built by packing_rows"),
    }
    Ok(())
}

/// All packing points share one trace and one cloud reference run.
pub(super) fn packing_rows(scenario: &Scenario, points: Vec<BTreeMap<String, f64>>, metric: &str) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = points
        .into_iter()
        .enumerate()
        .map(|(i, p)| ComparisonRow::new(i, p, metric))
        .collect();
    if let Err(e) = fill_packing(scenario, &mut rows) {
        for row in &mut rows {
            row.fail(&e);
        }
    }
    rows
}

fn fill_packing(scenario: &Scenario, rows: &mut [ComparisonRow]) -> Result<()> {
    let first = &rows[0];
    let to_u32 = |name: &'static str, row: &ComparisonRow| {
        count(row, name).and_then(|v| u32::try_from(v).map_err(|_| invalid(name, "too large")))
    };
    let cloud = Topology::cloud(to_u32("cloud_servers", first)?, to_u32("cloud_cores", first)?);
    let edge = Topology::edge(to_u32("k_sites", first)?, 1, to_u32("cloud_cores", first)?);
    let q = get(first, "q")?;
    let tolerance = get(first, "tolerance")?;
    let model_size = f64::from(cloud.cores_per_server) * crate::capacity::edge_overprovision_factor(q)?;
    let spec = SyntheticTraceSpec::for_utilization(
        count(first, "count")? as usize,
        get(first, "rho")?,
        cloud.total_cores() as f64,
        get(first, "mean_lifetime")?,
    );
    let trace = generate_synthetic_trace(&spec, SeededStream::new(scenario.seed, 0))?;
    let grid = rows.iter().map(|r| to_u32("edge_cores", r)).collect::<Result<Vec<_>>>()?;
    let sweep = edge_size_sweep(
        &trace,
        &cloud,
        &edge,
        &grid,
        Policy::FirstFit,
        SiteAssign::Uniform,
        SeededStream::new(scenario.seed, 1),
        tolerance,
    )?;
    let cloud_capacity = f64::from(sweep.cloud.peak_servers_used * cloud.cores_per_server);
    for (row, sweep_row) in rows.iter_mut().zip(&sweep.rows) {
        let rep = &sweep_row.report;
        row.set_values(None, rep.relative_error_vs_cloud, None);
        let edge_capacity = f64::from(rep.peak_servers_used) * f64::from(sweep_row.cores_per_server);
        let target = cloud_capacity * (1.0 + 1.0 / q);
        row.extra.insert("model_size".into(), model_size);
        row.extra.insert("normalized_delay".into(), rep.normalized_delay);
        row.extra
            .insert("cloud_normalized_delay".into(), sweep.cloud.normalized_delay);
        row.extra.insert("peak_servers_used".into(), f64::from(rep.peak_servers_used));
        row.extra
            .insert("peak_capacity_error".into(), (edge_capacity - target).abs() / target);
        if let Some(eq) = sweep.equivalence_size {
            row.extra.insert("equivalence_size".into(), f64::from(eq));
        }
    }
    Ok(())
}

/// Inputs of [`table_rush_hour`]; `scales` multiplies `lambda_bar`, `mu1`
/// and `mu2` together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RushHourParams {
    pub lambda_bar: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub r: f64,
    pub gamma: f64,
    pub scales: Vec<f64>,
    pub periods: u32,
    pub replications: usize,
    pub seed: u64,
    pub rush_statistic: RushStatistic,
}

/// Rush-hour wait, simulated and fluid, for every amplitude at every scale.
///
/// Rows come amplitude-major; `sim_value` is the simulated rush-window wait,
/// `analytic_value` the fluid estimate and `extra["mean_wait_sim"]` the
/// simulated wait over the whole run.
pub fn table_rush_hour(params: &RushHourParams, amplitudes: &[f64]) -> Result<Vec<ComparisonRow>> {
    let fixed = BTreeMap::from([
        ("lambda_bar".to_string(), params.lambda_bar),
        ("mu1".to_string(), params.mu1),
        ("mu2".to_string(), params.mu2),
        ("r".to_string(), params.r),
        ("gamma".to_string(), params.gamma),
        ("periods".to_string(), f64::from(params.periods)),
    ]);
    let scenario = Scenario {
        name: "rush_hour".into(),
        model: ScenarioModel::RushHour,
        fixed,
        grid: BTreeMap::from([
            ("amplitude".to_string(), amplitudes.to_vec()),
            ("scale".to_string(), params.scales.clone()),
        ]),
        replications: params.replications,
        seed: params.seed,
        rush_statistic: params.rush_statistic,
        outputs: Vec::new(),
    };
    run_scenario(&scenario).map(|r| r.rows)
}
