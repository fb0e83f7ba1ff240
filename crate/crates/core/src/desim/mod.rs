//! Discrete-event simulation of the edge, time-varying and cloud queues.
//!
//! Edge requests hold their server through the first service phase and,
//! with probability `r`, a migration phase. Migrated requests then queue at a
//! destination site. Setting [`MigrationMode::Tandem`] instead releases the
//! first server after phase one and serves the migration at the destination.

mod engine;
mod metrics;
mod replicate;

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{CloudSpec, NetworkSpec, QueueSpec, SinusoidProfile};
use crate::error::{Error, Result};
use crate::workload::{ArrivalSpec, RenewalFamily, RenewalSpec, SeededStream};
use engine::{EngineInput, Job};

pub use metrics::{RushStatistic, RushWindowStats, SimMetrics, TimeBin, TimeSeriesMetrics};
pub use replicate::{aggregate, replicate, replicate_runs, AggregateMetrics, Summary};

const CH_ARRIVALS: u8 = 0;
const CH_SERVICE1: u8 = 1;
const CH_ROUTING: u8 = 2;
const CH_SERVICE2: u8 = 3;
const CH_DEST_SERVICE: u8 = 4;
const CH_HOME_ARRIVALS: u8 = 5;
const CH_HOME_SERVICE: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TwoPhaseEdge,
    Mtm1Sinusoidal,
    MmkCloud,
    Gg1Edge,
}

/// When a run stops admitting requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// A fixed number of arrivals, all served to completion.
    Requests(u64),
    /// Arrivals in `[0, t)`.
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationMode {
    /// The first server stays busy through the migration phase.
    #[default]
    Held,
    /// The first server is released after phase one; the destination serves
    /// the migration.
    Tandem,
}

/// Service demands at the first station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub phase1: RenewalSpec,
    #[serde(default)]
    pub phase2: Option<RenewalSpec>,
    /// Probability that a request needs the migration phase.
    #[serde(default)]
    pub r: f64,
}

impl ServiceSpec {
    pub fn single(phase1: RenewalSpec) -> Self {
        Self {
            phase1,
            phase2: None,
            r: 0.0,
        }
    }

    /// Mean demand at the first station, `m₁ + r m₂`.
    pub fn mean(&self) -> f64 {
        self.phase1.mean + self.r * self.phase2.map_or(0.0, |p| p.mean)
    }
}

/// The site that receives migrated requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DestinationSpec {
    #[serde(default)]
    pub mode: MigrationMode,
    pub service: RenewalSpec,
    /// Rate of the destination's own Poisson traffic.
    #[serde(default)]
    pub home_rate: f64,
}

/// Phase-folded binning of the time-varying model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSeriesSpec {
    #[serde(default = "default_bins")]
    pub bins_per_period: usize,
    #[serde(default)]
    pub rush_statistic: RushStatistic,
}

fn default_bins() -> usize {
    100
}

impl Default for TimeSeriesSpec {
    fn default() -> Self {
        Self {
            bins_per_period: default_bins(),
            rush_statistic: RushStatistic::default(),
        }
    }
}

fn default_warmup() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

fn default_servers() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: ModelKind,
    pub arrivals: ArrivalSpec,
    pub service: ServiceSpec,
    #[serde(default = "default_servers")]
    pub servers: u32,
    #[serde(default)]
    pub destination: Option<DestinationSpec>,
    pub horizon: Horizon,
    /// Fraction of requests, in arrival order, excluded from statistics.
    #[serde(default = "default_warmup")]
    pub warmup: f64,
    /// With a time horizon, keep serving admitted requests after it ends.
    #[serde(default = "default_true")]
    pub drain: bool,
    #[serde(default)]
    pub network: Option<NetworkSpec>,
    #[serde(default)]
    pub time_series: TimeSeriesSpec,
    /// Writes `event_time,event_type,request_id,queue_id` rows when set.
    #[serde(default)]
    pub event_log: Option<PathBuf>,
}

fn exp_mean(rate: f64) -> RenewalSpec {
    RenewalSpec::exponential(1.0 / rate)
}

impl SimConfig {
    fn base(model: ModelKind, arrivals: ArrivalSpec, service: ServiceSpec, horizon: Horizon) -> Self {
        Self {
            model,
            arrivals,
            service,
            servers: 1,
            destination: None,
            horizon,
            warmup: default_warmup(),
            drain: true,
            network: None,
            time_series: TimeSeriesSpec::default(),
            event_log: None,
        }
    }

    /// Markovian edge queue with migration to a destination served at `μ₁`.
    pub fn two_phase(spec: &QueueSpec, requests: u64) -> Result<Self> {
        spec.validate()?;
        let mut cfg = Self::base(
            ModelKind::TwoPhaseEdge,
            ArrivalSpec::Poisson { rate: spec.lambda },
            ServiceSpec {
                phase1: exp_mean(spec.mu1),
                phase2: spec.mu2.is_finite().then(|| exp_mean(spec.mu2)),
                r: spec.r,
            },
            Horizon::Requests(requests),
        );
        if spec.r > 0.0 {
            cfg.destination = Some(DestinationSpec {
                mode: MigrationMode::Held,
                service: exp_mean(spec.mu1),
                home_rate: 0.0,
            });
        }
        Ok(cfg)
    }

    /// Edge queue with renewal arrivals and general service phases.
    pub fn gg1(spec: &QueueSpec, arrivals: RenewalSpec, phase1: RenewalSpec, phase2: RenewalSpec, requests: u64) -> Result<Self> {
        let mut cfg = Self::two_phase(spec, requests)?;
        cfg.model = ModelKind::Gg1Edge;
        cfg.arrivals = ArrivalSpec::Renewal(arrivals);
        cfg.service.phase1 = phase1;
        cfg.service.phase2 = Some(phase2);
        if let Some(d) = cfg.destination.as_mut() {
            d.service = phase1;
        }
        Ok(cfg)
    }

    /// Sinusoidal arrivals to one exponential server at rate `mu_eff`, run
    /// for `periods` whole cycles.
    pub fn mtm1(profile: &SinusoidProfile, mu_eff: f64, periods: u32) -> Result<Self> {
        profile.validate()?;
        crate::error::require_positive("mu_eff", mu_eff)?;
        Ok(Self::base(
            ModelKind::Mtm1Sinusoidal,
            ArrivalSpec::Sinusoid(*profile),
            ServiceSpec::single(exp_mean(mu_eff)),
            Horizon::Time(f64::from(periods) * profile.period()),
        ))
    }

    /// Like [`SimConfig::mtm1`] with explicit exponential phases held at one server.
    pub fn mtm1_two_stage(profile: &SinusoidProfile, mu1: f64, mu2: f64, r: f64, periods: u32) -> Result<Self> {
        QueueSpec::new(profile.lambda_bar, mu1, mu2, r)?;
        let mut cfg = Self::mtm1(profile, mu1, periods)?;
        cfg.service = ServiceSpec {
            phase1: exp_mean(mu1),
            phase2: Some(exp_mean(mu2)),
            r,
        };
        Ok(cfg)
    }

    /// M/M/k cloud carrying `cloud.lambda_total()`.
    pub fn mmk(cloud: &CloudSpec, requests: u64) -> Result<Self> {
        cloud.validate()?;
        let mut cfg = Self::base(
            ModelKind::MmkCloud,
            ArrivalSpec::Poisson {
                rate: cloud.lambda_total(),
            },
            ServiceSpec::single(exp_mean(cloud.mu_cloud)),
            Horizon::Requests(requests),
        );
        cfg.servers = cloud.k;
        Ok(cfg)
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_network(mut self, network: NetworkSpec) -> Self {
        self.network = Some(network);
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    /// Effective service rate of the first station, `1/(m₁ + r m₂)`.
    pub fn mu_eff(&self) -> f64 {
        1.0 / self.service.mean()
    }

    /// Load on the first station and on the destination.
    pub fn utilizations(&self) -> (f64, f64) {
        let lambda = self.arrivals.mean_rate();
        let s = &self.service;
        let first = match self.destination.map(|d| d.mode) {
            Some(MigrationMode::Tandem) => lambda * s.phase1.mean,
            _ => lambda * s.mean(),
        } / f64::from(self.servers);
        let dest = self
            .destination
            .map_or(0.0, |d| (s.r * lambda + d.home_rate) * d.service.mean);
        (first, dest)
    }

    fn rtt(&self) -> f64 {
        self.network.map_or(0.0, |n| match self.model {
            ModelKind::MmkCloud => n.t_cloud,
            _ => n.t_edge,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(format!("{:?}: {msg}", self.model)));
        self.arrivals.validate()?;
        self.service.phase1.sampler()?;
        if let Some(p2) = self.service.phase2 {
            p2.sampler()?;
        }
        crate::error::require_probability("r", self.service.r)?;
        if let Some(d) = self.destination {
            d.service.sampler()?;
            crate::error::require_non_negative("home_rate", d.home_rate)?;
            if d.mode == MigrationMode::Tandem && self.service.phase2.is_some() {
                return fail("tandem migration is served at the destination; drop service.phase2");
            }
        }
        if self.service.r > 0.0 && self.service.phase2.is_none() && self.destination.is_none() {
            return fail("r > 0 needs a migration phase or a destination");
        }
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(crate::error::invalid(
                "warmup",
                format!("must lie in [0, 1), got {}", self.warmup),
            ));
        }
        match self.horizon {
            Horizon::Requests(0) => return Err(crate::error::invalid("horizon", "need at least one request")),
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(crate::error::invalid("horizon", format!("must be finite and > 0, got {t}")))
            }
            _ => {}
        }
        if self.servers == 0 {
            return Err(crate::error::invalid("servers", "need at least one server"));
        }
        if self.time_series.bins_per_period == 0 {
            return Err(crate::error::invalid("bins_per_period", "need at least one bin"));
        }
        let exponential = |s: &RenewalSpec| s.family == RenewalFamily::Exponential;
        match self.model {
            ModelKind::TwoPhaseEdge => {
                if !matches!(self.arrivals, ArrivalSpec::Poisson { .. }) {
                    return fail("needs Poisson arrivals");
                }
                if !exponential(&self.service.phase1) || !self.service.phase2.as_ref().is_none_or(exponential) {
                    return fail("needs exponential service phases");
                }
                if self.servers != 1 {
                    return fail("an edge site has one server");
                }
            }
            ModelKind::Gg1Edge => {
                if matches!(self.arrivals, ArrivalSpec::Sinusoid(_)) {
                    return fail("needs stationary arrivals");
                }
                if self.servers != 1 {
                    return fail("an edge site has one server");
                }
            }
            ModelKind::Mtm1Sinusoidal => {
                if !matches!(self.arrivals, ArrivalSpec::Sinusoid(_)) {
                    return fail("needs sinusoidal arrivals");
                }
                if self.servers != 1 || self.destination.is_some() {
                    return fail("is a single server without a destination");
                }
            }
            ModelKind::MmkCloud => {
                if !matches!(self.arrivals, ArrivalSpec::Poisson { .. }) || !exponential(&self.service.phase1) {
                    return fail("needs Poisson arrivals and exponential service");
                }
                if self.service.r != 0.0 || self.destination.is_some() {
                    return fail("has no migration");
                }
            }
        }
        Ok(())
    }

    /// Fails with `UnstableQueue` when any station is at or above full load.
    pub fn check_stability(&self) -> Result<()> {
        let (first, dest) = self.utilizations();
        let what = if self.model == ModelKind::MmkCloud { "cloud" } else { "edge" };
        crate::analytic::check_stable(what, first)?;
        if self.destination.is_some() {
            crate::analytic::check_stable("destination", dest)?;
        }
        Ok(())
    }
}

/// Metrics of one run; `time_series` is present for the sinusoidal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub metrics: SimMetrics,
    pub time_series: Option<TimeSeriesMetrics>,
}

/// Runs any model.
///
/// Unstable configurations are rejected for request horizons (and always for
/// the cloud model); a time horizon may be used to study overload.
pub fn run(cfg: &SimConfig, stream: SeededStream) -> Result<SimRun> {
    cfg.validate()?;
    if cfg.model == ModelKind::MmkCloud || matches!(cfg.horizon, Horizon::Requests(_)) {
        cfg.check_stability()?;
    }
    let (input, warm_idx) = build_jobs(cfg, stream)?;
    let out = engine::run(input);
    if let Some(path) = &cfg.event_log {
        metrics::write_event_log(path, &out.events)?;
    }
    let m = metrics::summarize(&out, warm_idx, cfg.rtt());
    let time_series = match cfg.arrivals {
        ArrivalSpec::Sinusoid(profile) if cfg.model == ModelKind::Mtm1Sinusoidal => Some(metrics::time_series(
            &out,
            warm_idx,
            &profile,
            cfg.mu_eff(),
            &cfg.time_series,
        )?),
        _ => None,
    };
    Ok(SimRun { metrics: m, time_series })
}

/// Edge simulation (two-phase or general renewal inputs).
pub fn run_two_phase_sim(cfg: &SimConfig, stream: SeededStream) -> Result<SimMetrics> {
    if !matches!(cfg.model, ModelKind::TwoPhaseEdge | ModelKind::Gg1Edge) {
        return Err(Error::Config(format!("{:?} is not an edge model", cfg.model)));
    }
    run(cfg, stream).map(|r| r.metrics)
}

/// Sinusoidal-arrival simulation with phase-folded time series.
pub fn run_mtm1_sim(cfg: &SimConfig, stream: SeededStream) -> Result<(SimMetrics, TimeSeriesMetrics)> {
    if cfg.model != ModelKind::Mtm1Sinusoidal {
        return Err(Error::Config(format!("{:?} is not the sinusoidal model", cfg.model)));
    }
    let r = run(cfg, stream)?;
    Ok((r.metrics, r.time_series.expect("sinusoidal model yields a time series")))
}

/// Multi-server cloud simulation.
pub fn run_mmk_sim(cfg: &SimConfig, stream: SeededStream) -> Result<SimMetrics> {
    if cfg.model != ModelKind::MmkCloud {
        return Err(Error::Config(format!("{:?} is not the cloud model", cfg.model)));
    }
    run(cfg, stream).map(|r| r.metrics)
}

fn build_jobs(cfg: &SimConfig, stream: SeededStream) -> Result<(EngineInput, usize)> {
    let arrivals = cfg.arrivals.times(stream.channel(CH_ARRIVALS))?;
    let times: Vec<f64> = match cfg.horizon {
        Horizon::Requests(n) => arrivals.take(n as usize).take_while(|a| a.is_finite()).collect(),
        Horizon::Time(t) => arrivals.take_while(|&a| a < t).collect(),
    };
    let cutoff = match cfg.horizon {
        Horizon::Requests(_) => f64::INFINITY,
        Horizon::Time(t) => t,
    };
    let s1 = cfg.service.phase1.sampler()?;
    let s2 = cfg.service.phase2.map(|p| p.sampler()).transpose()?;
    let sd = cfg.destination.map(|d| d.service.sampler()).transpose()?;
    let mut rng1 = stream.channel(CH_SERVICE1).rng();
    let mut rng2 = stream.channel(CH_SERVICE2).rng();
    let mut rng_route = stream.channel(CH_ROUTING).rng();
    let mut rng_dest = stream.channel(CH_DEST_SERVICE).rng();
    let tandem = cfg.destination.is_some_and(|d| d.mode == MigrationMode::Tandem);

    let mut jobs: Vec<Job> = Vec::with_capacity(times.len());
    for &a in &times {
        let phase2 = cfg.service.r > 0.0 && rng_route.random::<f64>() < cfg.service.r;
        let mut service0 = s1.sample(&mut rng1);
        if phase2 && !tandem {
            if let Some(s2) = &s2 {
                service0 += s2.sample(&mut rng2);
            }
        }
        let service1 = match (&sd, phase2) {
            (Some(sd), true) => sd.sample(&mut rng_dest),
            _ => 0.0,
        };
        let mut job = Job::primary(a, service0, phase2 && sd.is_some(), service1);
        job.took_phase2 = phase2;
        jobs.push(job);
    }
    let n_primary = jobs.len();

    if let Some(d) = cfg.destination.filter(|d| d.home_rate > 0.0) {
        let last = times.last().copied().unwrap_or(0.0).min(cutoff);
        let home_sampler = d.service.sampler()?;
        let mut rng_home = stream.channel(CH_HOME_SERVICE).rng();
        let home = ArrivalSpec::Poisson { rate: d.home_rate }.times(stream.channel(CH_HOME_ARRIVALS))?;
        for a in home.take_while(|&a| a < last) {
            jobs.push(Job::home(a, home_sampler.sample(&mut rng_home)));
        }
    }

    let warm_idx = (cfg.warmup * n_primary as f64).floor() as usize;
    let measure_from = if warm_idx == 0 || n_primary == 0 {
        0.0
    } else {
        times[warm_idx.min(n_primary - 1)]
    };
    let servers1 = 1;
    Ok((
        EngineInput {
            jobs,
            n_primary,
            servers0: cfg.servers,
            servers1,
            cutoff,
            drain: cfg.drain || matches!(cfg.horizon, Horizon::Requests(_)),
            measure_from,
            log_events: cfg.event_log.is_some(),
        },
        warm_idx,
    ))
}
