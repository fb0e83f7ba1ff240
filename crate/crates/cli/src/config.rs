//! The simulation config file.
//!
//! Rates are per second and times in seconds. The modulation frequency is
//! given either as `gamma_rad_s` or as `period_s`; normalization keeps only
//! `gamma_rad_s`.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use edgeq_core::analytic::{CloudSpec, NetworkSpec, QueueSpec, SinusoidProfile};
use edgeq_core::capacity::Policy;
use edgeq_core::desim::{DestinationSpec, Horizon, MigrationMode, RushStatistic, SimConfig};
use edgeq_core::harness::OutputFormat;
use edgeq_core::workload::RenewalSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    TwoPhase,
    Gg1,
    Mtm1,
    Mmk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelName,
    /// Stem of the output files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    /// First-phase service rate, /s.
    pub mu1: f64,
    /// Migration-phase service rate, /s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    /// Migration probability.
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub migration_mode: MigrationMode,
    /// Own Poisson traffic of the destination site, /s.
    #[serde(default)]
    pub home_rate: f64,
    /// Squared coefficient of variation of each service phase (`gg1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_scv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSection {
    pub k: u32,
    /// Per-server service rate, /s.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Round-trip time to the edge, s.
    pub t_edge: f64,
    /// Round-trip time to the cloud, s.
    pub t_cloud: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    /// Mean arrival rate, /s; the total rate for `mmk`.
    pub lambda: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_s: Option<f64>,
    /// Phase offset, rad.
    #[serde(default)]
    pub phase: f64,
    /// Squared coefficient of variation of interarrival times (`gg1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_scv: Option<f64>,
}

fn default_warmup() -> f64 {
    0.1
}

fn default_reps() -> usize {
    1
}

fn default_cap() -> u64 {
    100_000
}

fn default_bins() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests: Option<u64>,
    /// Whole modulation periods to simulate (`mtm1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<u32>,
    /// Stop admitting at this time and do not drain, s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_s: Option<f64>,
    #[serde(default = "default_warmup")]
    pub warmup: f64,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Requests left in a stationary model at the horizon above which the
    /// run counts as unstable.
    #[serde(default = "default_cap")]
    pub max_in_system: u64,
    #[serde(default)]
    pub rush_statistic: RushStatistic,
    #[serde(default = "default_bins")]
    pub bins_per_period: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            requests: None,
            periods: None,
            horizon_s: None,
            warmup: default_warmup(),
            replications: default_reps(),
            seed: None,
            max_in_system: default_cap(),
            rush_statistic: RushStatistic::default(),
            bins_per_period: default_bins(),
        }
    }
}

fn default_q() -> f64 {
    2.0
}

fn default_tolerance() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    /// Cores of one edge site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_edge: Option<f64>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_edge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_cloud: Option<f64>,
    /// Edge travel overhead, same units as `c_edge`.
    #[serde(default)]
    pub tau: f64,
    /// VM trace CSV; a synthetic trace is generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_servers: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_cores: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sites: Option<u32>,
    /// Edge server sizes to sweep, cores.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_cores: Vec<u32>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub policy: Policy,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    #[serde(default)]
    pub deterministic_names: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_log: Option<PathBuf>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
            deterministic_names: false,
            event_log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<EdgeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<CloudSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacitySection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text)?;
        cfg.normalize()?;
        Ok(cfg)
    }

    /// Replaces `period_s` by `gamma_rad_s`.
    pub fn normalize(&mut self) -> Result<()> {
        if let Some(w) = self.workload.as_mut() {
            match (w.gamma_rad_s, w.period_s) {
                (Some(_), Some(_)) => bail!("workload: gamma_rad_s and period_s are mutually exclusive"),
                (None, Some(p)) => {
                    if !(p > 0.0 && p.is_finite()) {
                        bail!("workload: period_s must be finite and > 0, got {p}");
                    }
                    w.gamma_rad_s = Some(TAU / p);
                    w.period_s = None;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn canonical(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn name(&self) -> String {
        self.model.name.clone().unwrap_or_else(|| "simulate".into())
    }

    fn edge(&self) -> Result<&EdgeSection> {
        self.edge
            .as_ref()
            .ok_or_else(|| anyhow!("model {:?} needs an [edge] section", self.model.kind))
    }

    fn workload(&self) -> Result<&WorkloadSection> {
        self.workload
            .as_ref()
            .ok_or_else(|| anyhow!("model {:?} needs a [workload] section", self.model.kind))
    }

    fn queue_spec(&self) -> Result<QueueSpec> {
        let e = self.edge()?;
        let mu2 = match (e.mu2, e.r) {
            (Some(m), _) => m,
            (None, 0.0) => f64::INFINITY,
            (None, _) => bail!("edge: mu2 is required when r > 0"),
        };
        Ok(QueueSpec::new(self.workload()?.lambda, e.mu1, mu2, e.r)?)
    }

    /// The desim configuration this file describes.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let sim = &self.simulation;
        let requests = sim.requests.unwrap_or(200_000);
        let mut cfg = match self.model.kind {
            ModelName::TwoPhase | ModelName::Gg1 => {
                let w = self.workload()?;
                if w.amplitude != 0.0 {
                    bail!("workload: amplitude must be 0 for a stationary model; use kind = \"mtm1\"");
                }
                let spec = self.queue_spec()?;
                let mut cfg = if self.model.kind == ModelName::TwoPhase {
                    SimConfig::two_phase(&spec, requests)?
                } else {
                    let e = self.edge()?;
                    let cs2 = e.service_scv.unwrap_or(1.0);
                    let arrivals = RenewalSpec::for_scv(1.0 / spec.lambda, w.arrival_scv.unwrap_or(1.0))?;
                    let phase1 = RenewalSpec::for_scv(1.0 / spec.mu1, cs2)?;
                    let phase2 = if spec.mu2.is_finite() {
                        RenewalSpec::for_scv(1.0 / spec.mu2, cs2)?
                    } else {
                        phase1
                    };
                    SimConfig::gg1(&spec, arrivals, phase1, phase2, requests)?
                };
                let e = self.edge()?;
                if let Some(d) = cfg.destination.as_mut() {
                    d.mode = e.migration_mode;
                    d.home_rate = e.home_rate;
                } else if e.home_rate > 0.0 {
                    cfg.destination = Some(DestinationSpec {
                        mode: e.migration_mode,
                        service: RenewalSpec::exponential(1.0 / e.mu1),
                        home_rate: e.home_rate,
                    });
                }
                cfg
            }
            ModelName::Mtm1 => {
                let w = self.workload()?;
                let gamma = w
                    .gamma_rad_s
                    .ok_or_else(|| anyhow!("workload: mtm1 needs gamma_rad_s or period_s"))?;
                let profile = SinusoidProfile::with_phase(w.lambda, w.amplitude, gamma, w.phase)?;
                let e = self.edge()?;
                let periods = sim.periods.unwrap_or(20);
                let mut cfg = match (e.r, e.mu2) {
                    (r, Some(mu2)) if r > 0.0 => SimConfig::mtm1_two_stage(&profile, e.mu1, mu2, r, periods)?,
                    (r, None) if r > 0.0 => bail!("edge: mu2 is required when r > 0"),
                    _ => SimConfig::mtm1(&profile, e.mu1, periods)?,
                };
                cfg.time_series.rush_statistic = sim.rush_statistic;
                cfg.time_series.bins_per_period = sim.bins_per_period;
                cfg
            }
            ModelName::Mmk => {
                let c = self
                    .cloud
                    .as_ref()
                    .ok_or_else(|| anyhow!("model mmk needs a [cloud] section"))?;
                let cloud = CloudSpec::for_load(c.k, c.mu, self.workload()?.lambda)?;
                SimConfig::mmk(&cloud, requests)?
            }
        };
        if let Some(t) = sim.horizon_s {
            if self.model.kind == ModelName::Mtm1 {
                bail!("simulation: use periods, not horizon_s, for mtm1");
            }
            cfg = cfg.with_horizon(Horizon::Time(t));
            cfg.drain = false;
        }
        cfg = cfg.with_warmup(sim.warmup);
        if let Some(n) = &self.network {
            cfg = cfg.with_network(NetworkSpec::new(n.t_edge, n.t_cloud)?);
        }
        cfg.event_log = self.output.event_log.clone();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn is_stationary(&self) -> bool {
        self.model.kind != ModelName::Mtm1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[model]
kind = "mtm1"
name = "rush"

[edge]
mu1 = 32
mu2 = 32
r = 0.25

[network]
t_edge = 0.001
t_cloud = 0.028

[workload]
lambda = 16
amplitude = 0.8
period_s = 200

[simulation]
periods = 3
replications = 2
rush_statistic = "at_window_close"

[capacity]
c_edge = 96
q = 2
edge_cores = [64, 96]

[output]
dir = "out"
formats = ["csv", "json"]
"#;

    #[test]
    fn canonical_form_round_trips() {
        let cfg = ConfigFile::parse(FULL).unwrap();
        let w = cfg.workload.as_ref().unwrap();
        assert_eq!(w.period_s, None);
        assert!((w.gamma_rad_s.unwrap() - TAU / 200.0).abs() < 1e-15);
        let text = cfg.canonical().unwrap();
        let again = ConfigFile::parse(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.canonical().unwrap(), text);
        assert!(cfg.sim_config().is_ok());
    }

    #[test]
    fn rejects_unknown_keys_and_double_frequency() {
        assert!(ConfigFile::parse("[model]\nkind = \"mmk\"\ncolour = 1\n").is_err());
        assert!(ConfigFile::parse("[model]\nkind = \"mmk\"\n[cloud]\nk = 1\nmu = 2\nextra = 3\n").is_err());
        let both = "[model]\nkind = \"mtm1\"\n[workload]\nlambda = 1\ngamma_rad_s = 0.1\nperiod_s = 10\n";
        let err = ConfigFile::parse(both).unwrap_err();
        assert!(format!("{err:#}").contains("mutually exclusive"));
    }

    #[test]
    fn model_sections_are_checked() {
        let cfg = ConfigFile::parse("[model]\nkind = \"mmk\"\n[workload]\nlambda = 10\n").unwrap();
        assert!(cfg.sim_config().unwrap_err().to_string().contains("[cloud]"));
        let cfg =
            ConfigFile::parse("[model]\nkind = \"two_phase\"\n[edge]\nmu1 = 50\nr = 0.1\n[workload]\nlambda = 10\n").unwrap();
        assert!(cfg.sim_config().unwrap_err().to_string().contains("mu2"));
        let cfg = ConfigFile::parse("[model]\nkind = \"two_phase\"\n[edge]\nmu1 = 50\n[workload]\nlambda = 10\n").unwrap();
        assert!(cfg.sim_config().is_ok());
    }
}
